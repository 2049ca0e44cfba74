#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "flow/ndarray.hpp"

namespace flow {

namespace img {
class Image;
}

/// Shared immutable image payload; cheap to copy through a pipeline.
using ImageRef = std::shared_ptr<const img::Image>;

/// Thrown when a cell or element does not have the kind an operation needs.
class TypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueKind { Int, Float, Text, Array, Image };

std::string kind_name(ValueKind k);

// One cell of a data record: integer, float, text, array, or image.
class Value {
 public:
  Value() : v_(std::int64_t{0}) {}
  Value(std::int64_t x) : v_(x) {}
  Value(int x) : v_(static_cast<std::int64_t>(x)) {}
  Value(double x) : v_(x) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(NDArray a) : v_(std::move(a)) {}
  Value(ImageRef i);

  ValueKind kind() const { return static_cast<ValueKind>(v_.index()); }
  bool is_numeric() const { return kind() == ValueKind::Int || kind() == ValueKind::Float; }

  std::int64_t as_int() const;
  double as_number() const;  // Int or Float
  const std::string& as_text() const;
  const NDArray& as_array() const;
  const ImageRef& as_image() const;

  /// Scalar rendering used by CSV and log output. Floats use the shortest
  /// round-trip decimal form.
  std::string render() const;

  bool operator==(const Value& other) const;

 private:
  std::variant<std::int64_t, double, std::string, NDArray, ImageRef> v_;
};

std::string render_double(double x);

// Ordered tuple of cells; the record type flowing through pipelines.
// Always has at least one column.
class Sample {
 public:
  explicit Sample(std::vector<Value> columns);

  std::size_t size() const { return columns_.size(); }
  const Value& col(std::size_t i) const;
  Value& col(std::size_t i);
  const std::vector<Value>& columns() const { return columns_; }

  std::string render(char sep = ',') const;

  bool operator==(const Sample& other) const { return columns_ == other.columns_; }

 private:
  std::vector<Value> columns_;
};

class Element;

/// Consecutive grouping of elements (what chunking produces).
class List {
 public:
  List() = default;
  explicit List(std::vector<Element> items);
  std::size_t size() const;
  const Element& at(std::size_t i) const;
  const std::vector<Element>& items() const;
  bool operator==(const List& other) const;

 private:
  std::vector<Element> items_;
};

// What flows through a pipeline: a single cell, a record, or a grouping.
class Element {
 public:
  Element() : v_(Value{}) {}
  Element(Value v) : v_(std::move(v)) {}
  Element(Sample s) : v_(std::move(s)) {}
  Element(List l) : v_(std::move(l)) {}

  bool is_value() const { return std::holds_alternative<Value>(v_); }
  bool is_sample() const { return std::holds_alternative<Sample>(v_); }
  bool is_list() const { return std::holds_alternative<List>(v_); }

  const Value& value() const;
  Value& value();
  const Sample& sample() const;
  Sample& sample();
  const List& list() const;

  std::string render() const;

  bool operator==(const Element& other) const { return v_ == other.v_; }

 private:
  std::variant<Value, Sample, List> v_;
};

// --- host-value coercions -------------------------------------------------

inline Value to_value(Value v) { return v; }
inline Value to_value(std::int64_t x) { return Value(x); }
inline Value to_value(int x) { return Value(x); }
inline Value to_value(long long x) { return Value(static_cast<std::int64_t>(x)); }
inline Value to_value(std::size_t x) { return Value(static_cast<std::int64_t>(x)); }
inline Value to_value(double x) { return Value(x); }
inline Value to_value(float x) { return Value(static_cast<double>(x)); }
inline Value to_value(const std::string& s) { return Value(s); }
inline Value to_value(std::string&& s) { return Value(std::move(s)); }
inline Value to_value(const char* s) { return Value(s); }
inline Value to_value(NDArray a) { return Value(std::move(a)); }
inline Value to_value(ImageRef i) { return Value(std::move(i)); }

inline Element to_element(Element e) { return e; }
inline Element to_element(Sample s) { return Element(std::move(s)); }
inline Element to_element(List l) { return Element(std::move(l)); }
template <class T>
  requires requires(T&& t) { to_value(std::forward<T>(t)); }
Element to_element(T&& t) {
  return Element(to_value(std::forward<T>(t)));
}

/// Builds a record from host scalars: row(1, -1) -> 2-column Sample.
template <class... Ts>
Sample row(Ts&&... xs) {
  std::vector<Value> cols;
  cols.reserve(sizeof...(Ts));
  (cols.push_back(to_value(std::forward<Ts>(xs))), ...);
  return Sample(std::move(cols));
}

/// Builds an element vector from host values: elems(6, 7, 8).
template <class... Ts>
std::vector<Element> elems(Ts&&... xs) {
  std::vector<Element> out;
  out.reserve(sizeof...(Ts));
  (out.push_back(to_element(std::forward<Ts>(xs))), ...);
  return out;
}

}  // namespace flow
