#include "flow/ndarray.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>

namespace flow {

std::string dtype_name(Dtype d) {
  switch (d) {
    case Dtype::U8: return "u8";
    case Dtype::I64: return "i64";
    case Dtype::F64: return "f64";
  }
  return "?";
}

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_length(const std::vector<std::size_t>& shape, std::size_t n) {
  if (shape_size(shape) != n)
    throw std::invalid_argument("array data length " + std::to_string(n) +
                                " does not match shape product " +
                                std::to_string(shape_size(shape)));
}

}  // namespace

NDArray NDArray::zeros(Dtype dtype, std::vector<std::size_t> shape) {
  std::size_t n = shape_size(shape);
  switch (dtype) {
    case Dtype::U8: return of_u8(std::move(shape), std::vector<std::uint8_t>(n, 0));
    case Dtype::I64: return of_i64(std::move(shape), std::vector<std::int64_t>(n, 0));
    case Dtype::F64: return of_f64(std::move(shape), std::vector<double>(n, 0.0));
  }
  throw std::invalid_argument("bad dtype");
}

NDArray NDArray::of_u8(std::vector<std::size_t> shape, std::vector<std::uint8_t> data) {
  check_length(shape, data.size());
  return NDArray(Dtype::U8, std::move(shape), std::move(data));
}

NDArray NDArray::of_i64(std::vector<std::size_t> shape, std::vector<std::int64_t> data) {
  check_length(shape, data.size());
  return NDArray(Dtype::I64, std::move(shape), std::move(data));
}

NDArray NDArray::of_f64(std::vector<std::size_t> shape, std::vector<double> data) {
  check_length(shape, data.size());
  return NDArray(Dtype::F64, std::move(shape), std::move(data));
}

std::size_t NDArray::size() const { return shape_size(shape_); }

double NDArray::at_f64(std::size_t i) const {
  switch (dtype_) {
    case Dtype::U8: return static_cast<double>(u8()[i]);
    case Dtype::I64: return static_cast<double>(i64()[i]);
    case Dtype::F64: return f64()[i];
  }
  throw std::logic_error("bad dtype");
}

std::vector<double> NDArray::to_f64() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = at_f64(i);
  return out;
}

bool NDArray::operator==(const NDArray& other) const {
  return dtype_ == other.dtype_ && shape_ == other.shape_ && data_ == other.data_;
}

std::string NDArray::render() const {
  std::string out = "[";
  for (std::size_t i = 0; i < size(); ++i) {
    if (i) out += ',';
    if (dtype_ == Dtype::F64) {
      char buf[32];
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, f64()[i]);
      out.append(buf, p);
    } else {
      out += std::to_string(dtype_ == Dtype::U8 ? std::int64_t{u8()[i]} : i64()[i]);
    }
  }
  out += ']';
  return out;
}

}  // namespace flow
