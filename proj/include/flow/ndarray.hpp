#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace flow {

enum class Dtype { U8, I64, F64 };

std::string dtype_name(Dtype d);

// Dense n-dimensional array, row-major, one of three element kinds.
// Scalars (rank 0) have an empty shape and one element.
class NDArray {
 public:
  NDArray() : dtype_(Dtype::F64), shape_{0}, data_(std::vector<double>{}) {}

  static NDArray zeros(Dtype dtype, std::vector<std::size_t> shape);
  static NDArray of_u8(std::vector<std::size_t> shape, std::vector<std::uint8_t> data);
  static NDArray of_i64(std::vector<std::size_t> shape, std::vector<std::int64_t> data);
  static NDArray of_f64(std::vector<std::size_t> shape, std::vector<double> data);

  /// 1-d convenience constructors.
  static NDArray vec_i64(std::initializer_list<std::int64_t> xs) {
    return of_i64({xs.size()}, std::vector<std::int64_t>(xs));
  }
  static NDArray vec_f64(std::initializer_list<double> xs) {
    return of_f64({xs.size()}, std::vector<double>(xs));
  }

  Dtype dtype() const { return dtype_; }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const;  // product of extents

  std::span<const std::uint8_t> u8() const { return std::get<std::vector<std::uint8_t>>(data_); }
  std::span<const std::int64_t> i64() const { return std::get<std::vector<std::int64_t>>(data_); }
  std::span<const double> f64() const { return std::get<std::vector<double>>(data_); }
  std::span<std::uint8_t> u8_mut() { return std::get<std::vector<std::uint8_t>>(data_); }
  std::span<std::int64_t> i64_mut() { return std::get<std::vector<std::int64_t>>(data_); }
  std::span<double> f64_mut() { return std::get<std::vector<double>>(data_); }

  /// Element at flat index converted to double, regardless of dtype.
  double at_f64(std::size_t i) const;

  /// All elements converted to double.
  std::vector<double> to_f64() const;

  bool operator==(const NDArray& other) const;

  std::string render() const;  // "[1,2,3]" style, used by logging

 private:
  using Storage = std::variant<std::vector<std::uint8_t>, std::vector<std::int64_t>, std::vector<double>>;
  NDArray(Dtype dtype, std::vector<std::size_t> shape, Storage data)
      : dtype_(dtype), shape_(std::move(shape)), data_(std::move(data)) {}

  Dtype dtype_;
  std::vector<std::size_t> shape_;
  Storage data_;
};

}  // namespace flow
