#pragma once

// Static graph-convolution zoo.  Two surfaces:
//  - plain-tensor op functions (used by verification and as test oracles),
//  - tape-building layer descriptors with trainable parameters (used by models).
//
// Every op transforms features first (linear map or MLP) and then aggregates
// with the graph weights.  Feature layout is [J x T x C]; weight layouts match
// autograd.hpp.

#include "stgc/graphs.hpp"
#include "stgc/nn.hpp"

namespace stgc {

enum class DecomposedOrder { SpatialFirst, TemporalFirst };

// ------------------------------------------------------------ op functions --

// Full spatiotemporal: y = aggregate(a[JT x JT], x * w)
Tensor st_gc(const Tensor& x, const Tensor& a, const Tensor& w);
// Spatial only: per-frame aggregation with a[T x J x J]
Tensor s_gc(const Tensor& x, const Tensor& a_s, const Tensor& w);
// Temporal only: per-joint aggregation with a[J x T x T]
Tensor t_gc(const Tensor& x, const Tensor& a_t, const Tensor& w);
// Two stacked stages; map1/w1 belongs to the first stage in the given order.
Tensor decomposed_gc(const Tensor& x, const Tensor& a_s, const Tensor& a_t,
                     const Tensor& w1, const Tensor& w2, DecomposedOrder order);
// Decomposed with shared (vanilla) matrices a_s[J x J], a_t[T x T].
Tensor vstd_gc(const Tensor& x, const Tensor& a_s, const Tensor& a_t,
               const Tensor& w1, const Tensor& w2, DecomposedOrder order);
// Factored product form: one transform, pairwise spatial*temporal weights.
Tensor sts_gc(const Tensor& x, const Tensor& a_s, const Tensor& a_t,
              const Tensor& w, IndexConvention conv);

// -------------------------------------------------------------- transforms --

struct TransformP {
  LinearMapP linear;
  MlpP mlp;
  bool is_mlp = false;
  // x is [rows x C_in]; returns [rows x C_out]
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

TransformP make_transform_linear(ParamStore& store, const std::string& name,
                                 int in, int out, Rng& rng,
                                 bool zero_init = false);
// two-layer MLP, hidden width = out
TransformP make_transform_mlp(ParamStore& store, const std::string& name,
                              int in, int out, Rng& rng,
                              bool zero_last = false);

// ------------------------------------------------------------------ layers --

// Adjacency parameter ranks distinguish storage: rank-2 parameters are shared
// (vanilla) matrices expanded on the tape; rank-3 are unshared slices.

struct StLayer {
  int adj = -1;  // [JT x JT]
  TransformP tf;
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

struct SpatialLayer {
  int adj = -1;  // [T x J x J] or [J x J]
  TransformP tf;
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

struct TemporalLayer {
  int adj = -1;  // [J x T x T] or [T x T]
  TransformP tf;
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

// Two stacked stages (covers STD, TSD and their vanilla forms).  When
// single_transform is set, stage one carries the only transform and stage two
// aggregates the already-transformed features directly.
struct DecomposedLayer {
  SpatialLayer spatial;
  TemporalLayer temporal;
  DecomposedOrder order = DecomposedOrder::SpatialFirst;
  bool single_transform = false;
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

struct FactoredLayer {
  int adj_s = -1;  // [T x J x J]
  int adj_t = -1;  // [J x T x T]
  TransformP tf;
  IndexConvention conv = IndexConvention::SourceFrame;
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

// Expands rank-2 (vanilla) adjacency parameters on the tape; passes rank-3
// through.  frames/joints gives the broadcast count for the missing axis.
Var adjacency_on_tape(Tape& tape, VarCache& cache, int adj, int broadcast);

}  // namespace stgc
