#include "stgc/tensor.hpp"

#include <cmath>
#include <sstream>

#include "stgc/kernels.hpp"

namespace stgc {

std::size_t shape_count(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill)
    : shape_(std::move(shape)), data_(shape_count(shape_), fill) {}

Tensor Tensor::scalar(double v) {
  Tensor t(std::vector<int>{1});
  t.data_[0] = v;
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  if (shape_count(shape) != values.size())
    throw ShapeError("value count does not match shape");
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << 'x';
    os << shape_[i];
  }
  os << ']';
  return os.str();
}

void Tensor::reshape(std::vector<int> shape) {
  if (shape_count(shape) != data_.size())
    throw ShapeError("reshape changes element count");
  shape_ = std::move(shape);
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, "matmul expects rank-2 inputs");
  require(a.dim(1) == b.dim(0), "matmul inner dimensions differ");
  Tensor c(std::vector<int>{a.dim(0), b.dim(1)});
  kernels::active().matmul(a.data(), b.data(), c.data(), a.dim(0), a.dim(1),
                           b.dim(1), false);
  return c;
}

Tensor batch_matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 3 && b.ndim() == 3, "batch_matmul expects rank-3 inputs");
  require(a.dim(0) == b.dim(0), "batch_matmul batch sizes differ");
  require(a.dim(2) == b.dim(1), "batch_matmul inner dimensions differ");
  const int bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
  Tensor c(std::vector<int>{bs, m, n});
  const auto& ops = kernels::active();
  for (int s = 0; s < bs; ++s)
    ops.matmul(a.data() + static_cast<std::size_t>(s) * m * k,
               b.data() + static_cast<std::size_t>(s) * k * n,
               c.data() + static_cast<std::size_t>(s) * m * n, m, k, n, false);
  return c;
}

Tensor transpose2d(const Tensor& a) {
  require(a.ndim() == 2, "transpose2d expects a rank-2 input");
  Tensor t(std::vector<int>{a.dim(1), a.dim(0)});
  kernels::transpose(a.data(), t.data(), a.dim(0), a.dim(1));
  return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "add shapes differ");
  Tensor out(a.shape());
  kernels::active().add(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "sub shapes differ");
  Tensor out(a.shape());
  kernels::active().sub(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), "mul shapes differ");
  Tensor out(a.shape());
  kernels::active().mul(a.data(), b.data(), out.data(), a.size());
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  kernels::active().scale(s, a.data(), out.data(), a.size());
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff shapes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

Tensor linear_apply(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require(x.ndim() >= 1 && w.ndim() == 2, "linear_apply expects a weight matrix");
  if (x.dim(x.ndim() - 1) != w.dim(0))
    throw ShapeError("linear_apply width mismatch: input " + x.shape_str() +
                     " vs weights " + w.shape_str());
  const int cols = w.dim(0);
  const int rows = static_cast<int>(x.size()) / cols;
  const int out = w.dim(1);
  Tensor y(std::vector<int>{rows, out});
  kernels::active().matmul(x.data(), w.data(), y.data(), rows, cols, out, false);
  if (!bias.empty()) {
    require(bias.ndim() == 1 && bias.dim(0) == out,
            "linear_apply bias width mismatch");
    for (int i = 0; i < rows; ++i)
      kernels::active().add(y.data() + static_cast<std::size_t>(i) * out,
                            bias.data(),
                            y.data() + static_cast<std::size_t>(i) * out,
                            static_cast<std::size_t>(out));
  }
  std::vector<int> shape(x.shape());
  shape.back() = out;
  y.reshape(std::move(shape));
  return y;
}

Tensor prelu(const Tensor& x, double slope) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
  return y;
}

Tensor random_uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = uniform(rng, lo, hi);
  return t;
}

}  // namespace stgc
