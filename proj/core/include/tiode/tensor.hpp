#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tiode {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Dense row-major array of 64-bit floats. Rank is arbitrary for storage;
// the autodiff tape only operates on rank-2 views.
class Tensor {
public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  // Validating constructor: rejects NaN/Inf and shape/data mismatch.
  static Tensor from_data(Shape shape, std::vector<double> data);
  // Construction from values already produced by internal arithmetic.
  static Tensor raw(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const;

  // Rank-2 accessors; a rank-1 tensor [n] is treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool empty() const { return data_.empty(); }
  bool all_finite() const;
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool bitwise_equal(const Tensor& other) const;

  Tensor reshaped(Shape shape) const;

private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t shape_numel(const Shape& s);

}  // namespace tiode
