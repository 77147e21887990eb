#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "spdlab/errors.hpp"

namespace spdlab {

// Dense row-major array of doubles. Holds parameters, activations and
// observations; rank is dynamic but rarely above 2.
class Array {
 public:
  Array() = default;

  explicit Array(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

  Array(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size()) {
      throw DimensionError("Array: shape/data size mismatch (" +
                           shape_string() + " vs " +
                           std::to_string(data_.size()) + " values)");
    }
  }

  static Array zeros(std::vector<std::size_t> shape) { return Array(std::move(shape)); }

  static Array full(std::vector<std::size_t> shape, double v) {
    Array a(std::move(shape));
    for (auto& x : a.data_) x = v;
    return a;
  }

  static Array scalar(double v) { return Array({1}, {v}); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  std::size_t extent(std::size_t dim) const { return shape_.at(dim); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 access: row-major (i, j).
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

  bool same_shape(const Array& o) const { return shape_ == o.shape_; }

  std::string shape_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) os << 'x';
      os << shape_[i];
    }
    os << ']';
    return os.str();
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  void require_finite(const std::string& where) const {
    if (!all_finite()) throw NumericsError(where + ": non-finite value in array " + shape_string());
  }

  Array flattened() const { return Array({size()}, data_); }

  // Row i of a rank-2 array, copied out as a rank-1 array.
  Array row(std::size_t i) const {
    if (rank() != 2) throw DimensionError("Array::row: rank-2 required, have " + shape_string());
    const std::size_t w = shape_[1];
    std::vector<double> out(data_.begin() + i * w, data_.begin() + (i + 1) * w);
    return Array({w}, std::move(out));
  }

  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return shape.empty() ? 0 : n;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline void axpy(double a, const Array& x, Array& y) {
  if (!x.same_shape(y)) throw DimensionError("axpy: shape mismatch " + x.shape_string() + " vs " + y.shape_string());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline double dot(const Array& a, const Array& b) {
  if (a.size() != b.size()) throw DimensionError("dot: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace spdlab
