#include "stgc/dynamic.hpp"

#include <cmath>

namespace stgc {

Var compact_project(Tape& tape, VarCache& cache, const LinearMapP& proj, Var x,
                    Axis axis) {
  const Tensor& xv = tape.value(x);
  if (xv.ndim() != 3) throw ShapeError("compact_project input must be [J x T x C]");
  const int J = xv.dim(0), T = xv.dim(1), C = xv.dim(2);
  Var x2d = tape.reshape(x, {J * T, C});
  Var p = proj.apply(tape, cache, x2d);
  const int w = tape.value(p).dim(1);
  if (axis == Axis::Spatial) return tape.reshape(p, {J, T * w});
  Var p3 = tape.reshape(p, {J, T, w});
  return tape.reshape(tape.swap01(p3), {T, J * w});
}

Var adjustment(Tape& tape, VarCache& cache, const AdjustmentHeadP& head, Var x,
               Axis axis) {
  const Tensor& xv = tape.value(x);
  const int J = xv.dim(0), T = xv.dim(1);
  Var tc = compact_project(tape, cache, head.theta, x, axis);
  Var pc = compact_project(tape, cache, head.phi, x, axis);
  Var pairs = tape.pair_concat_rows(tc, pc);
  Var m = head.mlp.apply(tape, cache, pairs);
  return tape.rows_to_front(m, axis == Axis::Spatial ? J : T);
}

Var update_correlation(Tape& tape, VarCache& cache, int corr, int alpha,
                       Var adjust, AdjRule rule, int broadcast) {
  Var shared = tape.expand_front(cache[corr], broadcast);
  if (!adjust.valid()) return shared;
  if (rule == AdjRule::Standard)
    return tape.add(shared, tape.scale_by(adjust, cache[alpha]));
  return tape.add(adjust, tape.scale_by(shared, cache[alpha]));
}

DynamicLayerP make_dynamic_layer(ParamStore& store, const std::string& name,
                                 Axis axis, int joints, int frames, int in,
                                 int out, int reduction, Rng& rng,
                                 const DynamicOpts& opts) {
  if (reduction <= 0) throw ConfigError("reduction rate must be positive");
  DynamicLayerP layer;
  layer.axis = axis;
  layer.rule = opts.rule;
  layer.use_adjustment = opts.use_adjustment;
  layer.tf = make_transform_linear(store, name + ".map", in, out, rng,
                                   opts.zero_map);
  if (!opts.map_bias) layer.tf.linear.b = -1;

  const int side = axis == Axis::Spatial ? joints : frames;
  Tensor corr_init;
  if (opts.prior) {
    if (opts.prior->ndim() != 2 || opts.prior->dim(0) != side ||
        opts.prior->dim(1) != side)
      throw ShapeError("prior shape does not match correlation side");
    corr_init = *opts.prior;
  } else {
    const double bound = 1.0 / std::sqrt(static_cast<double>(side));
    corr_init = random_uniform({side, side}, -bound, bound, rng);
  }
  layer.corr = store.add(name + ".corr", std::move(corr_init),
                         opts.corr_trainable);

  if (opts.use_adjustment) {
    const int compact = compact_width(in, reduction);
    const int fold = axis == Axis::Spatial ? frames : joints;
    layer.head.compact = compact;
    layer.head.theta = make_linear(store, name + ".theta", in, compact, rng);
    layer.head.phi = make_linear(store, name + ".phi", in, compact, rng);
    layer.head.mlp = make_mlp(store, name + ".adj",
                              {2 * fold * compact, fold, fold}, rng);
    layer.alpha = store.add(name + ".alpha", Tensor::scalar(0.0), true);
  } else {
    // Adjustment path disabled: keep a frozen alpha=0 so the blend scalar is
    // still reported, but skip the head entirely.
    layer.alpha = store.add(name + ".alpha", Tensor::scalar(0.0), false);
  }
  return layer;
}

DynamicOut apply_dynamic(Tape& tape, VarCache& cache, const DynamicLayerP& layer,
                         Var x) {
  const Tensor& xv = tape.value(x);
  if (xv.ndim() != 3) throw ShapeError("dynamic layer input must be [J x T x C]");
  const int J = xv.dim(0), T = xv.dim(1), C = xv.dim(2);
  Var x2d = tape.reshape(x, {J * T, C});
  Var f2d = layer.tf.apply(tape, cache, x2d);
  Var f = tape.reshape(f2d, {J, T, tape.value(f2d).dim(1)});

  DynamicOut out;
  if (layer.use_adjustment)
    out.adjust = adjustment(tape, cache, layer.head, x, layer.axis);
  const int broadcast = layer.axis == Axis::Spatial ? T : J;
  out.effective = update_correlation(tape, cache, layer.corr, layer.alpha,
                                     out.adjust, layer.rule, broadcast);
  out.y = layer.axis == Axis::Spatial
              ? tape.frame_aggregate(f, out.effective)
              : tape.joint_aggregate(f, out.effective);
  return out;
}

DynamicPairOut apply_dynamic_pair(Tape& tape, VarCache& cache,
                                  const DynamicLayerP& first,
                                  const DynamicLayerP& second, Var x) {
  DynamicPairOut out;
  out.first = apply_dynamic(tape, cache, first, x);
  out.second = apply_dynamic(tape, cache, second, out.first.y);
  out.y = out.second.y;
  return out;
}

}  // namespace stgc
