#include "stgc/autograd.hpp"

#include <cmath>
#include <cstring>
#include <utility>

#include "stgc/kernels.hpp"

namespace stgc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

void Tape::clear() {
  slots_.clear();
  nodes_.clear();
  recording_ = true;
}

int Tape::push_value(Tensor value, bool requires_grad) {
  Slot s;
  s.value = std::move(value);
  s.requires_grad = requires_grad && recording_;
  slots_.push_back(std::move(s));
  return static_cast<int>(slots_.size()) - 1;
}

void Tape::push_node(std::function<void()> back) {
  nodes_.push_back(std::move(back));
}

Tensor& Tape::grad_buf(int id) {
  Slot& s = slots_[static_cast<std::size_t>(id)];
  if (s.grad.empty() && s.value.size() > 0) s.grad = Tensor(s.value.shape());
  return s.grad;
}

const Tensor* Tape::grad_if_any(int id) {
  const Slot& s = slots_[static_cast<std::size_t>(id)];
  return s.grad.empty() ? nullptr : &s.grad;
}

void Tape::check(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(slots_.size()))
    throw ShapeError("variable does not belong to this tape");
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  return Var{push_value(std::move(value), requires_grad)};
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return slots_[static_cast<std::size_t>(v.id)].value;
}

const Tensor& Tape::grad(Var v) {
  check(v);
  return grad_buf(v.id);
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return slots_[static_cast<std::size_t>(v.id)].requires_grad;
}

void Tape::backward(Var out, double seed) {
  check(out);
  require(value(out).size() == 1, "backward output must hold a single element");
  grad_buf(out.id)[0] += seed;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

// ------------------------------------------------------------- elementwise --

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& av = slots_[a.id].value;
  const Tensor& bv = slots_[b.id].value;
  require(av.same_shape(bv), "add shapes differ");
  Tensor out(av.shape());
  kernels::active().add(av.data(), bv.data(), out.data(), out.size());
  const bool rg = slots_[a.id].requires_grad || slots_[b.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, a = a.id, b = b.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      if (slots_[a].requires_grad)
        kernels::active().axpy(1.0, g->data(), grad_buf(a).data(), g->size());
      if (slots_[b].requires_grad)
        kernels::active().axpy(1.0, g->data(), grad_buf(b).data(), g->size());
    });
  return o;
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& av = slots_[a.id].value;
  const Tensor& bv = slots_[b.id].value;
  require(av.same_shape(bv), "sub shapes differ");
  Tensor out(av.shape());
  kernels::active().sub(av.data(), bv.data(), out.data(), out.size());
  const bool rg = slots_[a.id].requires_grad || slots_[b.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, a = a.id, b = b.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      if (slots_[a].requires_grad)
        kernels::active().axpy(1.0, g->data(), grad_buf(a).data(), g->size());
      if (slots_[b].requires_grad)
        kernels::active().axpy(-1.0, g->data(), grad_buf(b).data(), g->size());
    });
  return o;
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& av = slots_[a.id].value;
  const Tensor& bv = slots_[b.id].value;
  require(av.same_shape(bv), "mul shapes differ");
  Tensor out(av.shape());
  kernels::active().mul(av.data(), bv.data(), out.data(), out.size());
  const bool rg = slots_[a.id].requires_grad || slots_[b.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, a = a.id, b = b.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& av2 = slots_[a].value;
      const Tensor& bv2 = slots_[b].value;
      if (slots_[a].requires_grad) {
        Tensor& da = grad_buf(a);
        for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * bv2[i];
      }
      if (slots_[b].requires_grad) {
        Tensor& db = grad_buf(b);
        for (std::size_t i = 0; i < g->size(); ++i) db[i] += (*g)[i] * av2[i];
      }
    });
  return o;
}

Var Tape::scale(Var x, double s) {
  check(x);
  const Tensor& xv = slots_[x.id].value;
  Tensor out(xv.shape());
  kernels::active().scale(s, xv.data(), out.data(), out.size());
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id, s] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      kernels::active().axpy(s, g->data(), grad_buf(x).data(), g->size());
    });
  return o;
}

Var Tape::scale_by(Var x, Var s) {
  check(x);
  check(s);
  const Tensor& xv = slots_[x.id].value;
  const Tensor& sv = slots_[s.id].value;
  require(sv.size() == 1, "scale_by factor must hold a single element");
  Tensor out(xv.shape());
  kernels::active().scale(sv[0], xv.data(), out.data(), out.size());
  const bool rg = slots_[x.id].requires_grad || slots_[s.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, s = s.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& xv2 = slots_[x].value;
      const double s0 = slots_[s].value[0];
      if (slots_[x].requires_grad)
        kernels::active().axpy(s0, g->data(), grad_buf(x).data(), g->size());
      if (slots_[s].requires_grad)
        grad_buf(s)[0] += kernels::active().dot(xv2.data(), g->data(), g->size());
    });
  return o;
}

Var Tape::prelu(Var x, Var slope) {
  check(x);
  check(slope);
  const Tensor& xv = slots_[x.id].value;
  const Tensor& sv = slots_[slope.id].value;
  require(sv.size() == 1, "prelu slope must hold a single element");
  const double s0 = sv[0];
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i)
    out[i] = xv[i] > 0.0 ? xv[i] : s0 * xv[i];
  const bool rg = slots_[x.id].requires_grad || slots_[slope.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, s = slope.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& xv2 = slots_[x].value;
      const double s1 = slots_[s].value[0];
      if (slots_[x].requires_grad) {
        Tensor& dx = grad_buf(x);
        for (std::size_t i = 0; i < g->size(); ++i)
          dx[i] += (*g)[i] * (xv2[i] > 0.0 ? 1.0 : s1);
      }
      if (slots_[s].requires_grad) {
        double ds = 0.0;
        for (std::size_t i = 0; i < g->size(); ++i)
          if (xv2[i] <= 0.0) ds += (*g)[i] * xv2[i];
        grad_buf(s)[0] += ds;
      }
    });
  return o;
}

// -------------------------------------------------------------- linear alg --

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& av = slots_[a.id].value;
  const Tensor& bv = slots_[b.id].value;
  require(av.ndim() == 2 && bv.ndim() == 2, "matmul expects rank-2 inputs");
  require(av.dim(1) == bv.dim(0), "matmul inner dimensions differ");
  const int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor out(std::vector<int>{m, n});
  kernels::active().matmul(av.data(), bv.data(), out.data(), m, k, n, false);
  const bool rg = slots_[a.id].requires_grad || slots_[b.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, a = a.id, b = b.id, o = o.id, m, k, n] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& av2 = slots_[a].value;
      const Tensor& bv2 = slots_[b].value;
      if (slots_[a].requires_grad) {
        Tensor bt(std::vector<int>{n, k});
        kernels::transpose(bv2.data(), bt.data(), k, n);
        kernels::active().matmul(g->data(), bt.data(), grad_buf(a).data(), m, n,
                                 k, true);
      }
      if (slots_[b].requires_grad) {
        Tensor at(std::vector<int>{k, m});
        kernels::transpose(av2.data(), at.data(), m, k);
        kernels::active().matmul(at.data(), g->data(), grad_buf(b).data(), k, m,
                                 n, true);
      }
    });
  return o;
}

Var Tape::linear(Var x, Var w, Var bias) {
  Var y = matmul(x, w);
  if (!bias.valid()) return y;
  check(bias);
  const Tensor& yv = slots_[y.id].value;
  const Tensor& bv = slots_[bias.id].value;
  require(bv.ndim() == 1 && bv.dim(0) == yv.dim(1), "linear bias width mismatch");
  const int rows = yv.dim(0), cols = yv.dim(1);
  Tensor out = yv;
  for (int i = 0; i < rows; ++i)
    kernels::active().add(out.data() + static_cast<std::size_t>(i) * cols,
                          bv.data(),
                          out.data() + static_cast<std::size_t>(i) * cols,
                          static_cast<std::size_t>(cols));
  const bool rg = slots_[y.id].requires_grad || slots_[bias.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, y = y.id, b = bias.id, o = o.id, rows, cols] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      if (slots_[y].requires_grad)
        kernels::active().axpy(1.0, g->data(), grad_buf(y).data(), g->size());
      if (slots_[b].requires_grad) {
        Tensor& db = grad_buf(b);
        for (int i = 0; i < rows; ++i)
          kernels::active().axpy(
              1.0, g->data() + static_cast<std::size_t>(i) * cols, db.data(),
              static_cast<std::size_t>(cols));
      }
    });
  return o;
}

// ----------------------------------------------------------------- reshape --

Var Tape::reshape(Var x, std::vector<int> shape) {
  check(x);
  Tensor out = slots_[x.id].value;
  out.reshape(std::move(shape));
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      kernels::active().axpy(1.0, g->data(), grad_buf(x).data(), g->size());
    });
  return o;
}

Var Tape::swap01(Var x) {
  check(x);
  const Tensor& xv = slots_[x.id].value;
  require(xv.ndim() == 3, "swap01 expects a rank-3 input");
  const int A = xv.dim(0), B = xv.dim(1), K = xv.dim(2);
  Tensor out(std::vector<int>{B, A, K});
  for (int a = 0; a < A; ++a)
    for (int b = 0; b < B; ++b)
      std::memcpy(out.data() + (static_cast<std::size_t>(b) * A + a) * K,
                  xv.data() + (static_cast<std::size_t>(a) * B + b) * K,
                  sizeof(double) * static_cast<std::size_t>(K));
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id, A, B, K] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      Tensor& dx = grad_buf(x);
      for (int a = 0; a < A; ++a)
        for (int b = 0; b < B; ++b)
          kernels::active().axpy(
              1.0, g->data() + (static_cast<std::size_t>(b) * A + a) * K,
              dx.data() + (static_cast<std::size_t>(a) * B + b) * K,
              static_cast<std::size_t>(K));
    });
  return o;
}

Var Tape::expand_front(Var x, int n) {
  check(x);
  const Tensor& xv = slots_[x.id].value;
  require(xv.ndim() == 2, "expand_front expects a rank-2 input");
  require(n > 0, "expand_front needs a positive count");
  const std::size_t sz = xv.size();
  Tensor out(std::vector<int>{n, xv.dim(0), xv.dim(1)});
  for (int i = 0; i < n; ++i)
    std::memcpy(out.data() + static_cast<std::size_t>(i) * sz, xv.data(),
                sizeof(double) * sz);
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id, n, sz] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      Tensor& dx = grad_buf(x);
      for (int i = 0; i < n; ++i)
        kernels::active().axpy(1.0, g->data() + static_cast<std::size_t>(i) * sz,
                               dx.data(), sz);
    });
  return o;
}

Var Tape::rows_to_front(Var x, int r) {
  check(x);
  const Tensor& xv = slots_[x.id].value;
  require(xv.ndim() == 2 && xv.dim(0) == r * r, "rows_to_front expects [R*R x S]");
  const int S = xv.dim(1);
  Tensor out(std::vector<int>{S, r, r});
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q) {
      const double* row = xv.data() + (static_cast<std::size_t>(p) * r + q) * S;
      for (int s = 0; s < S; ++s)
        out(s, p, q) = row[s];
    }
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id, r, S] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      Tensor& dx = grad_buf(x);
      for (int p = 0; p < r; ++p)
        for (int q = 0; q < r; ++q) {
          double* row = dx.data() + (static_cast<std::size_t>(p) * r + q) * S;
          for (int s = 0; s < S; ++s)
            row[s] += (*g)[(static_cast<std::size_t>(s) * r + p) * r + q];
        }
    });
  return o;
}

Var Tape::pair_concat_rows(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& av = slots_[a.id].value;
  const Tensor& bv = slots_[b.id].value;
  require(av.ndim() == 2 && bv.ndim() == 2, "pair_concat_rows expects rank-2 inputs");
  require(av.same_shape(bv), "pair_concat_rows shapes differ");
  const int R = av.dim(0), W = av.dim(1);
  Tensor out(std::vector<int>{R * R, 2 * W});
  for (int p = 0; p < R; ++p)
    for (int q = 0; q < R; ++q) {
      double* row = out.data() + (static_cast<std::size_t>(p) * R + q) * 2 * W;
      std::memcpy(row, av.data() + static_cast<std::size_t>(p) * W,
                  sizeof(double) * static_cast<std::size_t>(W));
      std::memcpy(row + W, bv.data() + static_cast<std::size_t>(q) * W,
                  sizeof(double) * static_cast<std::size_t>(W));
    }
  const bool rg = slots_[a.id].requires_grad || slots_[b.id].requires_grad;
  Var o{push_value(std::move(out), rg)};
  if (recording_ && rg)
    push_node([this, a = a.id, b = b.id, o = o.id, R, W] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      for (int p = 0; p < R; ++p)
        for (int q = 0; q < R; ++q) {
          const double* row =
              g->data() + (static_cast<std::size_t>(p) * R + q) * 2 * W;
          if (slots_[a].requires_grad)
            kernels::active().axpy(1.0, row,
                                   grad_buf(a).data() +
                                       static_cast<std::size_t>(p) * W,
                                   static_cast<std::size_t>(W));
          if (slots_[b].requires_grad)
            kernels::active().axpy(1.0, row + W,
                                   grad_buf(b).data() +
                                       static_cast<std::size_t>(q) * W,
                                   static_cast<std::size_t>(W));
        }
    });
  return o;
}

// ------------------------------------------------------------ aggregations --

namespace {

// features [J x T x C] -> frame-major copy [T x J x C]
void gather_frames(const Tensor& f, Tensor& out) {
  const int J = f.dim(0), T = f.dim(1), C = f.dim(2);
  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t)
      std::memcpy(out.data() + (static_cast<std::size_t>(t) * J + j) * C,
                  f.data() + (static_cast<std::size_t>(j) * T + t) * C,
                  sizeof(double) * static_cast<std::size_t>(C));
}

}  // namespace

Var Tape::frame_aggregate(Var f, Var a) {
  check(f);
  check(a);
  const Tensor& fv = slots_[f.id].value;
  const Tensor& av = slots_[a.id].value;
  require(fv.ndim() == 3, "frame_aggregate features must be [J x T x C]");
  const int J = fv.dim(0), T = fv.dim(1), C = fv.dim(2);
  require(av.ndim() == 3 && av.dim(0) == T && av.dim(1) == J && av.dim(2) == J,
          "frame_aggregate weights must be [T x J x J]");
  Tensor ff(std::vector<int>{T, J, C});
  gather_frames(fv, ff);
  Tensor yf(std::vector<int>{T, J, C});
  Tensor at(std::vector<int>{J, J});
  const auto& ops = kernels::active();
  for (int t = 0; t < T; ++t) {
    kernels::transpose(av.data() + static_cast<std::size_t>(t) * J * J,
                       at.data(), J, J);
    ops.matmul(at.data(), ff.data() + static_cast<std::size_t>(t) * J * C,
               yf.data() + static_cast<std::size_t>(t) * J * C, J, J, C, false);
  }
  Tensor y(std::vector<int>{J, T, C});
  for (int q = 0; q < J; ++q)
    for (int t = 0; t < T; ++t)
      std::memcpy(y.data() + (static_cast<std::size_t>(q) * T + t) * C,
                  yf.data() + (static_cast<std::size_t>(t) * J + q) * C,
                  sizeof(double) * static_cast<std::size_t>(C));
  const bool rg = slots_[f.id].requires_grad || slots_[a.id].requires_grad;
  Var o{push_value(std::move(y), rg)};
  if (recording_ && rg)
    push_node([this, f = f.id, a = a.id, o = o.id, J, T, C] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& fv2 = slots_[f].value;
      const Tensor& av2 = slots_[a].value;
      Tensor gf(std::vector<int>{T, J, C});
      gather_frames(*g, gf);
      const auto& ops = kernels::active();
      if (slots_[f].requires_grad) {
        Tensor dff(std::vector<int>{J, C});
        Tensor& dx = grad_buf(f);
        for (int t = 0; t < T; ++t) {
          ops.matmul(av2.data() + static_cast<std::size_t>(t) * J * J,
                     gf.data() + static_cast<std::size_t>(t) * J * C,
                     dff.data(), J, J, C, false);
          for (int p = 0; p < J; ++p)
            ops.axpy(1.0, dff.data() + static_cast<std::size_t>(p) * C,
                     dx.data() + (static_cast<std::size_t>(p) * T + t) * C,
                     static_cast<std::size_t>(C));
        }
      }
      if (slots_[a].requires_grad) {
        Tensor ff2(std::vector<int>{T, J, C});
        gather_frames(fv2, ff2);
        Tensor gft(std::vector<int>{C, J});
        Tensor& da = grad_buf(a);
        for (int t = 0; t < T; ++t) {
          kernels::transpose(gf.data() + static_cast<std::size_t>(t) * J * C,
                             gft.data(), J, C);
          ops.matmul(ff2.data() + static_cast<std::size_t>(t) * J * C,
                     gft.data(), da.data() + static_cast<std::size_t>(t) * J * J,
                     J, C, J, true);
        }
      }
    });
  return o;
}

Var Tape::joint_aggregate(Var f, Var a) {
  check(f);
  check(a);
  const Tensor& fv = slots_[f.id].value;
  const Tensor& av = slots_[a.id].value;
  require(fv.ndim() == 3, "joint_aggregate features must be [J x T x C]");
  const int J = fv.dim(0), T = fv.dim(1), C = fv.dim(2);
  require(av.ndim() == 3 && av.dim(0) == J && av.dim(1) == T && av.dim(2) == T,
          "joint_aggregate weights must be [J x T x T]");
  Tensor y(std::vector<int>{J, T, C});
  Tensor at(std::vector<int>{T, T});
  const auto& ops = kernels::active();
  for (int q = 0; q < J; ++q) {
    kernels::transpose(av.data() + static_cast<std::size_t>(q) * T * T,
                       at.data(), T, T);
    ops.matmul(at.data(), fv.data() + static_cast<std::size_t>(q) * T * C,
               y.data() + static_cast<std::size_t>(q) * T * C, T, T, C, false);
  }
  const bool rg = slots_[f.id].requires_grad || slots_[a.id].requires_grad;
  Var o{push_value(std::move(y), rg)};
  if (recording_ && rg)
    push_node([this, f = f.id, a = a.id, o = o.id, J, T, C] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& fv2 = slots_[f].value;
      const Tensor& av2 = slots_[a].value;
      const auto& ops = kernels::active();
      if (slots_[f].requires_grad) {
        Tensor& dx = grad_buf(f);
        for (int q = 0; q < J; ++q)
          ops.matmul(av2.data() + static_cast<std::size_t>(q) * T * T,
                     g->data() + static_cast<std::size_t>(q) * T * C,
                     dx.data() + static_cast<std::size_t>(q) * T * C, T, T, C,
                     true);
      }
      if (slots_[a].requires_grad) {
        Tensor gt(std::vector<int>{C, T});
        Tensor& da = grad_buf(a);
        for (int q = 0; q < J; ++q) {
          kernels::transpose(g->data() + static_cast<std::size_t>(q) * T * C,
                             gt.data(), T, C);
          ops.matmul(fv2.data() + static_cast<std::size_t>(q) * T * C,
                     gt.data(), da.data() + static_cast<std::size_t>(q) * T * T,
                     T, C, T, true);
        }
      }
    });
  return o;
}

Var Tape::full_aggregate(Var f, Var a) {
  check(f);
  check(a);
  const Tensor& fv = slots_[f.id].value;
  const Tensor& av = slots_[a.id].value;
  require(fv.ndim() == 2, "full_aggregate features must be [V x C]");
  const int V = fv.dim(0), C = fv.dim(1);
  require(av.ndim() == 2 && av.dim(0) == V && av.dim(1) == V,
          "full_aggregate weights must be [V x V]");
  Tensor at(std::vector<int>{V, V});
  kernels::transpose(av.data(), at.data(), V, V);
  Tensor y(std::vector<int>{V, C});
  kernels::active().matmul(at.data(), fv.data(), y.data(), V, V, C, false);
  const bool rg = slots_[f.id].requires_grad || slots_[a.id].requires_grad;
  Var o{push_value(std::move(y), rg)};
  if (recording_ && rg)
    push_node([this, f = f.id, a = a.id, o = o.id, V, C] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& fv2 = slots_[f].value;
      const Tensor& av2 = slots_[a].value;
      const auto& ops = kernels::active();
      if (slots_[f].requires_grad)
        ops.matmul(av2.data(), g->data(), grad_buf(f).data(), V, V, C, true);
      if (slots_[a].requires_grad) {
        Tensor gt(std::vector<int>{C, V});
        kernels::transpose(g->data(), gt.data(), V, C);
        ops.matmul(fv2.data(), gt.data(), grad_buf(a).data(), V, C, V, true);
      }
    });
  return o;
}

Var Tape::factored_aggregate(Var f, Var a_s, Var a_t, IndexConvention conv) {
  check(f);
  check(a_s);
  check(a_t);
  const Tensor& fv = slots_[f.id].value;
  const Tensor& sv = slots_[a_s.id].value;
  const Tensor& tv = slots_[a_t.id].value;
  require(fv.ndim() == 3, "factored_aggregate features must be [J x T x C]");
  const int J = fv.dim(0), T = fv.dim(1), C = fv.dim(2);
  require(sv.ndim() == 3 && sv.dim(0) == T && sv.dim(1) == J && sv.dim(2) == J,
          "factored_aggregate spatial weights must be [T x J x J]");
  require(tv.ndim() == 3 && tv.dim(0) == J && tv.dim(1) == T && tv.dim(2) == T,
          "factored_aggregate temporal weights must be [J x T x T]");
  Tensor y(std::vector<int>{J, T, C});
  const auto& ops = kernels::active();
  for (int q = 0; q < J; ++q)
    for (int n = 0; n < T; ++n) {
      double* yrow = y.data() + (static_cast<std::size_t>(q) * T + n) * C;
      for (int p = 0; p < J; ++p)
        for (int m = 0; m < T; ++m) {
          const double s = conv == IndexConvention::SourceFrame ? sv(m, p, q)
                                                                : sv(n, p, q);
          const double t = conv == IndexConvention::OutputJointTemporal
                               ? tv(p, m, n)
                               : tv(q, m, n);
          const double w = s * t;
          if (w != 0.0)
            ops.axpy(w, fv.data() + (static_cast<std::size_t>(p) * T + m) * C,
                     yrow, static_cast<std::size_t>(C));
        }
    }
  const bool rg = slots_[f.id].requires_grad || slots_[a_s.id].requires_grad ||
                  slots_[a_t.id].requires_grad;
  Var o{push_value(std::move(y), rg)};
  if (recording_ && rg)
    push_node([this, f = f.id, as = a_s.id, at = a_t.id, o = o.id, conv, J, T, C] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& fv2 = slots_[f].value;
      const Tensor& sv2 = slots_[as].value;
      const Tensor& tv2 = slots_[at].value;
      const auto& ops = kernels::active();
      const bool need_f = slots_[f].requires_grad;
      const bool need_s = slots_[as].requires_grad;
      const bool need_t = slots_[at].requires_grad;
      for (int q = 0; q < J; ++q)
        for (int n = 0; n < T; ++n) {
          const double* grow = g->data() + (static_cast<std::size_t>(q) * T + n) * C;
          for (int p = 0; p < J; ++p)
            for (int m = 0; m < T; ++m) {
              const bool src = conv == IndexConvention::SourceFrame;
              const bool pjoint = conv == IndexConvention::OutputJointTemporal;
              const double s = src ? sv2(m, p, q) : sv2(n, p, q);
              const double t = pjoint ? tv2(p, m, n) : tv2(q, m, n);
              const double* frow =
                  fv2.data() + (static_cast<std::size_t>(p) * T + m) * C;
              if (need_f && s * t != 0.0)
                ops.axpy(s * t, grow,
                         grad_buf(f).data() +
                             (static_cast<std::size_t>(p) * T + m) * C,
                         static_cast<std::size_t>(C));
              if (need_s || need_t) {
                const double d = ops.dot(frow, grow, static_cast<std::size_t>(C));
                if (need_s)
                  grad_buf(as)(src ? m : n, p, q) += t * d;
                if (need_t)
                  grad_buf(at)(pjoint ? p : q, m, n) += s * d;
              }
            }
        }
    });
  return o;
}

// -------------------------------------------------------------- reductions --

Var Tape::sum(Var x) {
  check(x);
  const Tensor& xv = slots_[x.id].value;
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(Tensor::scalar(s), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      Tensor& dx = grad_buf(x);
      const double gv = (*g)[0];
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += gv;
    });
  return o;
}

Var Tape::weighted_sum(Var x, Tensor w) {
  check(x);
  const Tensor& xv = slots_[x.id].value;
  require(xv.size() == w.size(), "weighted_sum weight count mismatch");
  const double s = kernels::active().dot(xv.data(), w.data(), xv.size());
  const bool rg = slots_[x.id].requires_grad;
  Var o{push_value(Tensor::scalar(s), rg)};
  if (recording_ && rg)
    push_node([this, x = x.id, o = o.id, w = std::move(w)] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      kernels::active().axpy((*g)[0], w.data(), grad_buf(x).data(), w.size());
    });
  return o;
}

Var Tape::mean_joint_distance(Var pred, const Tensor& truth, int t0, int t1) {
  check(pred);
  const Tensor& pv = slots_[pred.id].value;
  require(pv.ndim() == 3 && pv.dim(2) == 3,
          "mean_joint_distance expects [J x T x 3]");
  require(pv.same_shape(truth), "mean_joint_distance shapes differ");
  const int J = pv.dim(0), T = pv.dim(1);
  require(0 <= t0 && t0 < t1 && t1 <= T, "mean_joint_distance bad frame range");
  const double norm = 1.0 / (static_cast<double>(J) * (t1 - t0));
  double acc = 0.0;
  for (int j = 0; j < J; ++j)
    for (int t = t0; t < t1; ++t) {
      const std::size_t base = (static_cast<std::size_t>(j) * T + t) * 3;
      const double dx = pv[base] - truth[base];
      const double dy = pv[base + 1] - truth[base + 1];
      const double dz = pv[base + 2] - truth[base + 2];
      acc += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
  const bool rg = slots_[pred.id].requires_grad;
  Var o{push_value(Tensor::scalar(acc * norm), rg)};
  if (recording_ && rg)
    push_node([this, p = pred.id, o = o.id, truth, t0, t1, norm] {
      const Tensor* g = grad_if_any(o);
      if (!g) return;
      const Tensor& pv2 = slots_[p].value;
      Tensor& dx = grad_buf(p);
      const int T = pv2.dim(1);
      const double gv = (*g)[0] * norm;
      for (int j = 0; j < pv2.dim(0); ++j)
        for (int t = t0; t < t1; ++t) {
          const std::size_t base = (static_cast<std::size_t>(j) * T + t) * 3;
          const double ex = pv2[base] - truth[base];
          const double ey = pv2[base + 1] - truth[base + 1];
          const double ez = pv2[base + 2] - truth[base + 2];
          const double d = std::sqrt(ex * ex + ey * ey + ez * ez);
          if (d > 0.0) {
            dx[base] += gv * ex / d;
            dx[base + 1] += gv * ey / d;
            dx[base + 2] += gv * ez / d;
          }
        }
    });
  return o;
}

}  // namespace stgc
