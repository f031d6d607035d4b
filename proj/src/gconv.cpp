#include "stgc/gconv.hpp"

namespace stgc {

namespace {

// Plain-tensor ops run on a scratch tape with recording off so they share the
// exact arithmetic of the trainable layers.
struct Scratch {
  Tape tape;
  Scratch() { tape.set_recording(false); }
  Var give(const Tensor& t) { return tape.leaf(t); }
  Tensor take(Var v) { return tape.value(v); }
};

Var transform_rows(Tape& tape, Var x3d, const Tensor& w) {
  const Tensor& xv = tape.value(x3d);
  const int J = xv.dim(0), T = xv.dim(1), C = xv.dim(2);
  Var x2d = tape.reshape(x3d, {J * T, C});
  Var y = tape.matmul(x2d, tape.leaf(w));
  return tape.reshape(y, {J, T, w.dim(1)});
}

}  // namespace

Tensor st_gc(const Tensor& x, const Tensor& a, const Tensor& w) {
  Scratch s;
  const int J = x.dim(0), T = x.dim(1);
  Var f = transform_rows(s.tape, s.give(x), w);
  Var f2d = s.tape.reshape(f, {J * T, w.dim(1)});
  Var y = s.tape.full_aggregate(f2d, s.give(a));
  return s.take(s.tape.reshape(y, {J, T, w.dim(1)}));
}

Tensor s_gc(const Tensor& x, const Tensor& a_s, const Tensor& w) {
  Scratch s;
  Var f = transform_rows(s.tape, s.give(x), w);
  return s.take(s.tape.frame_aggregate(f, s.give(a_s)));
}

Tensor t_gc(const Tensor& x, const Tensor& a_t, const Tensor& w) {
  Scratch s;
  Var f = transform_rows(s.tape, s.give(x), w);
  return s.take(s.tape.joint_aggregate(f, s.give(a_t)));
}

Tensor decomposed_gc(const Tensor& x, const Tensor& a_s, const Tensor& a_t,
                     const Tensor& w1, const Tensor& w2,
                     DecomposedOrder order) {
  if (order == DecomposedOrder::SpatialFirst)
    return t_gc(s_gc(x, a_s, w1), a_t, w2);
  return s_gc(t_gc(x, a_t, w1), a_s, w2);
}

Tensor vstd_gc(const Tensor& x, const Tensor& a_s, const Tensor& a_t,
               const Tensor& w1, const Tensor& w2, DecomposedOrder order) {
  const int J = x.dim(0), T = x.dim(1);
  return decomposed_gc(x, expand_vanilla_spatial(a_s, T),
                       expand_vanilla_temporal(a_t, J), w1, w2, order);
}

Tensor sts_gc(const Tensor& x, const Tensor& a_s, const Tensor& a_t,
              const Tensor& w, IndexConvention conv) {
  Scratch s;
  Var f = transform_rows(s.tape, s.give(x), w);
  return s.take(s.tape.factored_aggregate(f, s.give(a_s), s.give(a_t), conv));
}

// -------------------------------------------------------------- transforms --

Var TransformP::apply(Tape& tape, VarCache& cache, Var x) const {
  return is_mlp ? mlp.apply(tape, cache, x) : linear.apply(tape, cache, x);
}

TransformP make_transform_linear(ParamStore& store, const std::string& name,
                                 int in, int out, Rng& rng, bool zero_init) {
  TransformP tf;
  tf.linear = make_linear(store, name, in, out, rng, true, zero_init);
  return tf;
}

TransformP make_transform_mlp(ParamStore& store, const std::string& name,
                              int in, int out, Rng& rng, bool zero_last) {
  TransformP tf;
  tf.is_mlp = true;
  tf.mlp = make_mlp(store, name, {in, out, out}, rng, zero_last);
  return tf;
}

// ------------------------------------------------------------------ layers --

namespace {

struct Shaped {
  int J, T, C;
};

Shaped dims_of(Tape& tape, Var x) {
  const Tensor& v = tape.value(x);
  if (v.ndim() != 3) throw ShapeError("layer input must be [J x T x C]");
  return {v.dim(0), v.dim(1), v.dim(2)};
}

Var apply_transform(Tape& tape, VarCache& cache, const TransformP& tf, Var x) {
  const Shaped d = dims_of(tape, x);
  Var x2d = tape.reshape(x, {d.J * d.T, d.C});
  Var f = tf.apply(tape, cache, x2d);
  const int out = tape.value(f).dim(1);
  return tape.reshape(f, {d.J, d.T, out});
}

}  // namespace

Var adjacency_on_tape(Tape& tape, VarCache& cache, int adj, int broadcast) {
  Var a = cache[adj];
  if (tape.value(a).ndim() == 2) a = tape.expand_front(a, broadcast);
  return a;
}

Var StLayer::apply(Tape& tape, VarCache& cache, Var x) const {
  const Shaped d = dims_of(tape, x);
  Var x2d = tape.reshape(x, {d.J * d.T, d.C});
  Var f = tf.apply(tape, cache, x2d);
  const int out = tape.value(f).dim(1);
  Var y = tape.full_aggregate(f, cache[adj]);
  return tape.reshape(y, {d.J, d.T, out});
}

Var SpatialLayer::apply(Tape& tape, VarCache& cache, Var x) const {
  const Shaped d = dims_of(tape, x);
  Var f = apply_transform(tape, cache, tf, x);
  return tape.frame_aggregate(f, adjacency_on_tape(tape, cache, adj, d.T));
}

Var TemporalLayer::apply(Tape& tape, VarCache& cache, Var x) const {
  const Shaped d = dims_of(tape, x);
  Var f = apply_transform(tape, cache, tf, x);
  return tape.joint_aggregate(f, adjacency_on_tape(tape, cache, adj, d.J));
}

Var DecomposedLayer::apply(Tape& tape, VarCache& cache, Var x) const {
  const Shaped d = dims_of(tape, x);
  auto agg_s = [&](Var f) {
    return tape.frame_aggregate(f, adjacency_on_tape(tape, cache, spatial.adj, d.T));
  };
  auto agg_t = [&](Var f) {
    return tape.joint_aggregate(f, adjacency_on_tape(tape, cache, temporal.adj, d.J));
  };
  if (order == DecomposedOrder::SpatialFirst) {
    Var h = agg_s(apply_transform(tape, cache, spatial.tf, x));
    if (single_transform) return agg_t(h);
    return agg_t(apply_transform(tape, cache, temporal.tf, h));
  }
  Var h = agg_t(apply_transform(tape, cache, temporal.tf, x));
  if (single_transform) return agg_s(h);
  return agg_s(apply_transform(tape, cache, spatial.tf, h));
}

Var FactoredLayer::apply(Tape& tape, VarCache& cache, Var x) const {
  Var f = apply_transform(tape, cache, tf, x);
  // The source-frame convention factors into two sequential aggregations,
  // which is much cheaper than the generic pairwise product.
  if (conv == IndexConvention::SourceFrame)
    return tape.joint_aggregate(tape.frame_aggregate(f, cache[adj_s]),
                                cache[adj_t]);
  return tape.factored_aggregate(f, cache[adj_s], cache[adj_t], conv);
}

}  // namespace stgc
