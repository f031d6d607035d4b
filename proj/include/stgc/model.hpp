#pragma once

// Full prediction models: pose duplication feeds an encode unit (coords ->
// channels), a stack of blocks wrapped in local residual connections, and a
// decode unit (channels -> coords) whose output is added to the duplicated
// input (global residual).  Every unit is one or more graph-convolution
// stages; parallel layers within a stage are summed, stages run in sequence,
// and each non-decode unit ends in a PReLU.
//
// Two architectures:
//  - Compare: every unit is a single layer of the selected kind (the
//    like-for-like zoo used for parameter and runtime comparisons),
//  - Full: each unit is two parallel dynamic-spatial branches (natural- and
//    semantic-prior correlations) followed by a dynamic-temporal stage
//    (kind dstd), or the mirror image (kind dtsd).
//
// Ablation switches on the Full architecture:
//  - constrained_only: adjustment path off, every alpha frozen at 0
//  - dynamic_only:     shared correlations frozen at 0, non-trainable
//  - reversed_update:  effective = adjustment + alpha * correlation
//  - no_prior:         correlations randomly initialized instead of priors
//  - static:           dynamic layers swapped for static unshared S/T layers
//  - ds_only:          temporal stages replaced by dynamic-spatial layers
//  - dt_only:          spatial branches replaced by dynamic-temporal layers

#include <iosfwd>
#include <variant>

#include "stgc/data.hpp"
#include "stgc/dynamic.hpp"

namespace stgc {

enum class GcKind { St, S, T, Std, Tsd, Vstd, Sts, Ds, Dt, Dstd, Dtsd };
enum class ModelArch { Compare, Full };
enum class ModelVariant {
  Full,
  ConstrainedOnly,
  DynamicOnly,
  ReversedUpdate,
  NoPrior,
  StaticGc,
  DsOnly,
  DtOnly,
};

const char* to_string(GcKind k);
const char* to_string(ModelArch a);
const char* to_string(ModelVariant v);
const char* to_string(IndexConvention c);
GcKind parse_gc_kind(const std::string& s);
ModelArch parse_arch(const std::string& s);
ModelVariant parse_variant(const std::string& s);
IndexConvention parse_convention(const std::string& s);

struct ModelConfig {
  int joints = 25;
  int past = 10;    // observed frames
  int future = 25;  // predicted frames
  int coords = 3;
  int channels = 64;
  int reduction = 32;
  int blocks = 5;           // residual blocks between encode and decode
  int units_per_block = 1;  // units inside each block
  ModelArch arch = ModelArch::Full;
  GcKind kind = GcKind::Dstd;
  ModelVariant variant = ModelVariant::Full;
  IndexConvention convention = IndexConvention::SourceFrame;
  unsigned long long seed = 1;
  SkeletonSpec skeleton;  // required only when a spatial prior is used

  int frames() const { return past + future; }
  int units() const { return blocks * units_per_block + 2; }
  bool needs_skeleton() const;
  void validate() const;
};

using AnyLayer = std::variant<StLayer, SpatialLayer, TemporalLayer,
                              DecomposedLayer, FactoredLayer, DynamicLayerP>;

struct GcUnit {
  // stages run sequentially; layers within a stage act on the same input and
  // their outputs are summed
  std::vector<std::vector<AnyLayer>> stages;
  int slope = -1;  // PReLU parameter; -1 = no activation (decode unit)
};

struct Model {
  ModelConfig cfg;
  ParamStore store;
  GcUnit encode;
  std::vector<std::vector<GcUnit>> blocks;
  GcUnit decode;
};

Model build_model(const ModelConfig& cfg);

Var apply_layer(Tape& tape, VarCache& cache, const AnyLayer& layer, Var x);
Var apply_unit(Tape& tape, VarCache& cache, const GcUnit& unit, Var x);
// input [J x frames() x coords] (already duplicated); returns same shape
Var model_forward(Model& m, Tape& tape, VarCache& cache, Var input);

// Tapeless forward on plain values.
Tensor predict_full(Model& m, const Tensor& input);
// observed must hold exactly cfg.past frames; output has past+future frames.
MotionSequence forward_model(Model& m, const MotionSequence& observed);

// ------------------------------------------------------------- param count --

std::size_t count_params(const Model& m);  // trainable elements
std::vector<std::pair<std::string, std::size_t>> param_breakdown(const Model& m);

// Closed-form count for one Compare-architecture unit of the given kind
// (excludes the unit's PReLU slope).
std::size_t unit_param_formula(GcKind kind, int joints, int frames, int in,
                               int out, int reduction);
// Closed-form count for a whole model; variant must be Full.
std::size_t model_param_formula(const ModelConfig& cfg);

// -------------------------------------------------------------- checkpoint --

// Versioned binary container: config text, skeleton text, then every
// parameter as name + shape + little-endian 64-bit values.  Round-trips
// bit-exactly; loading rebuilds the model from the stored config.
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace stgc
