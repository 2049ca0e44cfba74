#include "flow/value.hpp"

#include <charconv>

#include "flow/image.hpp"

namespace flow {

std::string kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::Int: return "int";
    case ValueKind::Float: return "float";
    case ValueKind::Text: return "text";
    case ValueKind::Array: return "array";
    case ValueKind::Image: return "image";
  }
  return "?";
}

std::string render_double(double x) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

namespace {

[[noreturn]] void kind_mismatch(ValueKind want, ValueKind got) {
  throw TypeError("expected " + kind_name(want) + " value, got " + kind_name(got));
}

}  // namespace

Value::Value(ImageRef i) : v_(std::move(i)) {
  if (!std::get<ImageRef>(v_)) throw TypeError("null image handle");
}

std::int64_t Value::as_int() const {
  if (kind() != ValueKind::Int) kind_mismatch(ValueKind::Int, kind());
  return std::get<std::int64_t>(v_);
}

double Value::as_number() const {
  if (kind() == ValueKind::Int) return static_cast<double>(std::get<std::int64_t>(v_));
  if (kind() == ValueKind::Float) return std::get<double>(v_);
  kind_mismatch(ValueKind::Float, kind());
}

const std::string& Value::as_text() const {
  if (kind() != ValueKind::Text) kind_mismatch(ValueKind::Text, kind());
  return std::get<std::string>(v_);
}

const NDArray& Value::as_array() const {
  if (kind() != ValueKind::Array) kind_mismatch(ValueKind::Array, kind());
  return std::get<NDArray>(v_);
}

const ImageRef& Value::as_image() const {
  if (kind() != ValueKind::Image) kind_mismatch(ValueKind::Image, kind());
  return std::get<ImageRef>(v_);
}

std::string Value::render() const {
  switch (kind()) {
    case ValueKind::Int: return std::to_string(std::get<std::int64_t>(v_));
    case ValueKind::Float: return render_double(std::get<double>(v_));
    case ValueKind::Text: return std::get<std::string>(v_);
    case ValueKind::Array: return std::get<NDArray>(v_).render();
    case ValueKind::Image: {
      const auto& im = *std::get<ImageRef>(v_);
      return "image(" + std::to_string(im.height()) + "x" + std::to_string(im.width()) + "x" +
             std::to_string(im.channels()) + ")";
    }
  }
  return "?";
}

bool Value::operator==(const Value& other) const {
  if (kind() != other.kind()) return false;
  if (kind() == ValueKind::Image)
    return *std::get<ImageRef>(v_) == *std::get<ImageRef>(other.v_);  // by content
  return v_ == other.v_;
}

Sample::Sample(std::vector<Value> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw std::invalid_argument("a sample needs at least one column");
}

const Value& Sample::col(std::size_t i) const {
  if (i >= columns_.size())
    throw std::out_of_range("column " + std::to_string(i) + " out of range (sample has " +
                            std::to_string(columns_.size()) + " columns)");
  return columns_[i];
}

Value& Sample::col(std::size_t i) {
  return const_cast<Value&>(static_cast<const Sample&>(*this).col(i));
}

std::string Sample::render(char sep) const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += sep;
    out += columns_[i].render();
  }
  return out;
}

List::List(std::vector<Element> items) : items_(std::move(items)) {}
std::size_t List::size() const { return items_.size(); }
const Element& List::at(std::size_t i) const { return items_.at(i); }
const std::vector<Element>& List::items() const { return items_; }
bool List::operator==(const List& other) const { return items_ == other.items_; }

const Value& Element::value() const {
  if (!is_value()) throw TypeError("element is not a scalar value");
  return std::get<Value>(v_);
}

Value& Element::value() {
  if (!is_value()) throw TypeError("element is not a scalar value");
  return std::get<Value>(v_);
}

const Sample& Element::sample() const {
  if (!is_sample()) throw TypeError("element is not a sample");
  return std::get<Sample>(v_);
}

Sample& Element::sample() {
  if (!is_sample()) throw TypeError("element is not a sample");
  return std::get<Sample>(v_);
}

const List& Element::list() const {
  if (!is_list()) throw TypeError("element is not a list");
  return std::get<List>(v_);
}

std::string Element::render() const {
  if (is_value()) return value().render();
  if (is_sample()) return sample().render();
  std::string out = "[";
  const auto& items = list().items();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i].render();
  }
  return out + "]";
}

}  // namespace flow
