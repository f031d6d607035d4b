#pragma once

// Dynamic graph convolutions: a shared constrained correlation matrix plus a
// per-sample adjustment predicted from the layer's raw input.
//
// Spatial adjustment pipeline (temporal mirrors it with joints and frames
// swapped):  two compact projections theta/phi squeeze channels to
// ceil(C/reduction), the frame axis folds into the feature width, every
// ordered joint pair (p, q) concatenates [theta_p | phi_q], and a two-layer
// MLP maps each pair to one adjustment value per frame.

#include "stgc/gconv.hpp"

namespace stgc {

enum class Axis { Spatial, Temporal };

// Standard: effective = prior + alpha * adjustment
// Reversed: effective = adjustment + alpha * prior
enum class AdjRule { Standard, Reversed };

struct AdjustmentHeadP {
  LinearMapP theta;
  LinearMapP phi;
  MlpP mlp;
  int compact = 0;  // projected channel width
};

struct DynamicLayerP {
  Axis axis = Axis::Spatial;
  TransformP tf;
  int corr = -1;   // shared correlation matrix: [J x J] (spatial) or [T x T]
  int alpha = -1;  // blend scalar; -1 when the adjustment path is disabled
  AdjustmentHeadP head;
  AdjRule rule = AdjRule::Standard;
  bool use_adjustment = true;
};

struct DynamicOut {
  Var y;
  Var effective;  // [T x J x J] or [J x T x T] actually used for aggregation
  Var adjust;     // invalid when the adjustment path is disabled
};

// ---------------------------------------------------------------- op parts --

// x[J x T x C] -> [J x T*compact] (spatial) or [T x J*compact] (temporal):
// project channels, then fold the complementary axis into the feature width.
Var compact_project(Tape& tape, VarCache& cache, const LinearMapP& proj, Var x,
                    Axis axis);

// Full adjustment: [T x J x J] (spatial) or [J x T x T] (temporal).
Var adjustment(Tape& tape, VarCache& cache, const AdjustmentHeadP& head, Var x,
               Axis axis);

// Blend shared correlation (broadcast over the complementary axis) with the
// adjustment per the rule.
Var update_correlation(Tape& tape, VarCache& cache, int corr, int alpha,
                       Var adjust, AdjRule rule, int broadcast);

// ------------------------------------------------------------------ layers --

struct DynamicOpts {
  const Tensor* prior = nullptr;  // init for corr; nullptr -> random uniform
  bool corr_trainable = true;
  bool use_adjustment = true;
  AdjRule rule = AdjRule::Standard;
  bool map_bias = true;    // feature-transform bias
  bool zero_map = false;   // zero-init feature transform (output units)
};

DynamicLayerP make_dynamic_layer(ParamStore& store, const std::string& name,
                                 Axis axis, int joints, int frames, int in,
                                 int out, int reduction, Rng& rng,
                                 const DynamicOpts& opts = {});

DynamicOut apply_dynamic(Tape& tape, VarCache& cache, const DynamicLayerP& layer,
                         Var x);

// Two-stage composites; `first` runs on x, `second` on its output.
struct DynamicPairOut {
  DynamicOut first;
  DynamicOut second;
  Var y;
};
DynamicPairOut apply_dynamic_pair(Tape& tape, VarCache& cache,
                                  const DynamicLayerP& first,
                                  const DynamicLayerP& second, Var x);

inline int compact_width(int channels, int reduction) {
  return (channels + reduction - 1) / reduction;
}

}  // namespace stgc
