#pragma once

// Dense row-major f64 tensor, the only value type that flows through the
// library.  Rank is dynamic (0-4 in practice); shape checks throw ShapeError.

#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "stgc/common.hpp"

namespace stgc {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  static Tensor scalar(double v);
  static Tensor from(std::vector<int> shape, std::vector<double> values);

  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& operator()(int i) { return data_[idx1(i)]; }
  double operator()(int i) const { return data_[idx1(i)]; }
  double& operator()(int i, int j) { return data_[idx2(i, j)]; }
  double operator()(int i, int j) const { return data_[idx2(i, j)]; }
  double& operator()(int i, int j, int k) { return data_[idx3(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[idx3(i, j, k)]; }
  double& operator()(int i, int j, int k, int l) { return data_[idx4(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[idx4(i, j, k, l)]; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  std::string shape_str() const;

  // Reshape in place; element count must be preserved.
  void reshape(std::vector<int> shape);

 private:
  std::size_t idx1(int i) const {
    assert(ndim() == 1);
    return static_cast<std::size_t>(i);
  }
  std::size_t idx2(int i, int j) const {
    assert(ndim() == 2);
    return static_cast<std::size_t>(i) * shape_[1] + j;
  }
  std::size_t idx3(int i, int j, int k) const {
    assert(ndim() == 3);
    return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  std::size_t idx4(int i, int j, int k, int l) const {
    assert(ndim() == 4);
    return ((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) *
               shape_[3] +
           l;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

std::size_t shape_count(const std::vector<int>& shape);

// --------------------------------------------------------- plain-value ops --

// out[m x n] = a[m x k] * b[k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// Per-slice matmul: a[B x m x k] * b[B x k x n] -> [B x m x n]
Tensor batch_matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
double max_abs_diff(const Tensor& a, const Tensor& b);
double max_abs(const Tensor& a);

// x[R x In] * w[In x Out] (+ bias[Out] broadcast over rows, if non-empty)
Tensor linear_apply(const Tensor& x, const Tensor& w, const Tensor& bias);
// max(0,x) + slope*min(0,x), one shared slope
Tensor prelu(const Tensor& x, double slope);

Tensor random_uniform(std::vector<int> shape, double lo, double hi, Rng& rng);

}  // namespace stgc
