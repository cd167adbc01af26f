#include "tiode/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "tiode/errors.hpp"

namespace tiode {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ",";
    os << s[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

Tensor Tensor::zeros(Shape shape) {
  Tensor t;
  std::size_t n = shape_numel(shape);
  t.shape_ = std::move(shape);
  t.data_.assign(n, 0.0);
  return t;
}

Tensor Tensor::full(Shape shape, double value) {
  if (!std::isfinite(value)) throw ShapeError("Tensor::full: non-finite fill value");
  Tensor t;
  std::size_t n = shape_numel(shape);
  t.shape_ = std::move(shape);
  t.data_.assign(n, value);
  return t;
}

Tensor Tensor::scalar(double value) { return full({1, 1}, value); }

Tensor Tensor::from_data(Shape shape, std::vector<double> data) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("Tensor::from_data: shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  for (double v : data) {
    if (!std::isfinite(v)) throw ShapeError("Tensor::from_data: non-finite entry rejected");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

Tensor Tensor::raw(Shape shape, std::vector<double> data) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("Tensor::raw: shape/data mismatch");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(data);
  return t;
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("Tensor::extent: axis out of range");
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  if (shape_.size() == 2) return shape_[0];
  throw ShapeError("Tensor::rows: rank-2 view required, got " + shape_str(shape_));
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  if (shape_.size() == 2) return shape_[1];
  throw ShapeError("Tensor::cols: rank-2 view required, got " + shape_str(shape_));
}

double& Tensor::at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Tensor::bitwise_equal(const Tensor& other) const {
  if (shape_ != other.shape_) return false;
  if (data_.empty()) return other.data_.empty();
  return std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(double)) == 0;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    throw ShapeError("Tensor::reshaped: element count mismatch");
  }
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = data_;
  return t;
}

}  // namespace tiode
