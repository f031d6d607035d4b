#pragma once

// Reverse-mode autodiff at tensor-op granularity.  A Tape records every op in
// creation order; backward() replays the closures in reverse.  Ops only
// reference earlier slots, so creation order is already topological.
//
// Aggregation ops follow the library-wide layout: feature tensors are
// [joint x frame x channel], spatial weights are [frame x J x J] slices
// (entry (p, q) = source joint p -> output joint q), temporal weights are
// [joint x T x T] slices (entry (m, n) = source frame m -> output frame n).

#include <functional>
#include <vector>

#include "stgc/tensor.hpp"

namespace stgc {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Ordered-pair weighting convention for factored spatiotemporal products.
enum class IndexConvention {
  SourceFrame,          // spatial slice at the source frame, temporal at the output joint
  OutputFrame,          // spatial slice at the output frame, temporal at the output joint
  OutputJointTemporal,  // spatial slice at the output frame, temporal at the source joint
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  void set_recording(bool on) { recording_ = on; }
  void clear();
  std::size_t slot_count() const { return slots_.size(); }

  Var leaf(Tensor value, bool requires_grad = false);
  const Tensor& value(Var v) const;
  const Tensor& grad(Var v);  // zeros if backward never reached v
  bool requires_grad(Var v) const;

  // Seeds d(out)/d(out) = seed (out must be a single element) and sweeps the
  // recorded ops in reverse.  Grads accumulate; call clear() between samples.
  void backward(Var out, double seed = 1.0);

  // ---------------------------------------------------------- elementwise --
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var x, double s);
  Var scale_by(Var x, Var s);  // s holds a single element
  Var prelu(Var x, Var slope);  // slope holds a single element

  // ------------------------------------------------------------ linear alg --
  Var matmul(Var a, Var b);
  // x[R x In] * w[In x Out] + bias[Out] broadcast over rows (bias optional)
  Var linear(Var x, Var w, Var bias);

  // -------------------------------------------------------------- reshape --
  Var reshape(Var x, std::vector<int> shape);
  // [A x B x K] -> [B x A x K]
  Var swap01(Var x);
  // [D1 x D2] -> [n x D1 x D2] broadcast copies
  Var expand_front(Var x, int n);
  // [R*R x S] -> [S x R x R]; out(s, p, q) = in(p*R + q, s)
  Var rows_to_front(Var x, int r);
  // a[R x W], b[R x W] -> [R*R x 2W]; row p*R+q = [a_p | b_q]
  Var pair_concat_rows(Var a, Var b);

  // --------------------------------------------------------- aggregations --
  // f[J x T x C], a[T x J x J] -> y[J x T x C]; y(q,n,:) = sum_p a(n,p,q) f(p,n,:)
  Var frame_aggregate(Var f, Var a);
  // f[J x T x C], a[J x T x T] -> y[J x T x C]; y(q,n,:) = sum_m a(q,m,n) f(q,m,:)
  Var joint_aggregate(Var f, Var a);
  // f[V x C], a[V x V] -> y[V x C]; y(v,:) = sum_u a(u,v) f(u,:)
  Var full_aggregate(Var f, Var a);
  // Factored product aggregation: y(q,n,:) = sum_p sum_m s * t * f(p,m,:)
  // where (s, t) follow the convention (see IndexConvention).
  Var factored_aggregate(Var f, Var a_s, Var a_t, IndexConvention conv);

  // ------------------------------------------------------------ reductions --
  Var sum(Var x);
  Var weighted_sum(Var x, Tensor w);
  // Mean Euclidean distance per (joint, frame) over frames [t0, t1).
  // pred and truth are [J x T x 3]; zero distance contributes zero gradient.
  Var mean_joint_distance(Var pred, const Tensor& truth, int t0, int t1);

 private:
  struct Slot {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
  };

  int push_value(Tensor value, bool requires_grad);
  void push_node(std::function<void()> back);
  Tensor& grad_buf(int id);           // allocate zeros on first touch
  const Tensor* grad_if_any(int id);  // nullptr when no grad reached the slot
  void check(Var v) const;

  std::vector<Slot> slots_;
  std::vector<std::function<void()>> nodes_;
  bool recording_ = true;
};

}  // namespace stgc
