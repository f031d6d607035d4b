#include "stgc/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace stgc {
namespace {

struct Priors {
  Tensor natural, semantic, context;  // empty when unused
  Tensor zero_s, zero_t;
};

int add_random_adjacency(ParamStore& store, const std::string& name,
                         std::vector<int> shape, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(shape.back()));
  return store.add(name, random_uniform(shape, -bound, bound, rng), true);
}

AnyLayer make_static_spatial(ParamStore& store, const std::string& name, int J,
                             int T, int in, int out, bool zero, Rng& rng) {
  SpatialLayer l;
  l.adj = add_random_adjacency(store, name + ".adj", {T, J, J}, rng);
  l.tf = make_transform_linear(store, name + ".map", in, out, rng, zero);
  return l;
}

AnyLayer make_static_temporal(ParamStore& store, const std::string& name, int J,
                              int T, int in, int out, bool zero, Rng& rng) {
  TemporalLayer l;
  l.adj = add_random_adjacency(store, name + ".adj", {J, T, T}, rng);
  l.tf = make_transform_linear(store, name + ".map", in, out, rng, zero);
  return l;
}

// Which of the two dynamic-spatial priors a slot uses.
enum class Slot { DynSNat, DynSSem, DynT, StatS, StatT };

GcUnit make_unit(ParamStore& store, const std::string& prefix,
                 const ModelConfig& cfg, int in, int out, bool decode, Rng& rng,
                 const Priors& pri) {
  const int J = cfg.joints, T = cfg.frames(), r = cfg.reduction;
  GcUnit unit;

  DynamicOpts opts;
  if (cfg.variant == ModelVariant::ConstrainedOnly) opts.use_adjustment = false;
  if (cfg.variant == ModelVariant::DynamicOnly) opts.corr_trainable = false;
  if (cfg.variant == ModelVariant::ReversedUpdate) opts.rule = AdjRule::Reversed;

  auto dyn_spatial = [&](const std::string& name, bool semantic, int i, int o,
                         bool zero) -> AnyLayer {
    DynamicOpts op = opts;
    op.zero_map = zero;
    switch (cfg.variant) {
      case ModelVariant::NoPrior: op.prior = nullptr; break;
      case ModelVariant::DynamicOnly: op.prior = &pri.zero_s; break;
      default: op.prior = semantic ? &pri.semantic : &pri.natural; break;
    }
    return make_dynamic_layer(store, name, Axis::Spatial, J, T, i, o, r, rng, op);
  };
  auto dyn_temporal = [&](const std::string& name, int i, int o,
                          bool zero) -> AnyLayer {
    DynamicOpts op = opts;
    op.zero_map = zero;
    switch (cfg.variant) {
      case ModelVariant::NoPrior: op.prior = nullptr; break;
      case ModelVariant::DynamicOnly: op.prior = &pri.zero_t; break;
      default: op.prior = &pri.context; break;
    }
    return make_dynamic_layer(store, name, Axis::Temporal, J, T, i, o, r, rng,
                              op);
  };
  auto build_slot = [&](Slot s, const std::string& name, int i, int o,
                        bool zero) -> AnyLayer {
    switch (s) {
      case Slot::DynSNat: return dyn_spatial(name, false, i, o, zero);
      case Slot::DynSSem: return dyn_spatial(name, true, i, o, zero);
      case Slot::DynT: return dyn_temporal(name, i, o, zero);
      case Slot::StatS: return make_static_spatial(store, name, J, T, i, o, zero, rng);
      case Slot::StatT: return make_static_temporal(store, name, J, T, i, o, zero, rng);
    }
    throw ConfigError("unreachable slot");
  };

  if (cfg.arch == ModelArch::Full) {
    // Plan the stages as slots, then apply the variant's substitutions.
    std::vector<std::vector<Slot>> plan;
    if (cfg.kind == GcKind::Dstd)
      plan = {{Slot::DynSNat, Slot::DynSSem}, {Slot::DynT}};
    else
      plan = {{Slot::DynT}, {Slot::DynSNat, Slot::DynSSem}};
    for (auto& stage : plan)
      for (auto& s : stage) {
        if (cfg.variant == ModelVariant::StaticGc)
          s = (s == Slot::DynT) ? Slot::StatT : Slot::StatS;
        else if (cfg.variant == ModelVariant::DsOnly && s == Slot::DynT)
          s = Slot::DynSNat;
        else if (cfg.variant == ModelVariant::DtOnly && s != Slot::DynT)
          s = Slot::DynT;
      }
    for (std::size_t g = 0; g < plan.size(); ++g) {
      const int i = (g == 0) ? in : out;
      const bool last = g + 1 == plan.size();
      std::vector<AnyLayer> stage;
      for (std::size_t l = 0; l < plan[g].size(); ++l) {
        std::string name = prefix + ".g" + std::to_string(g);
        if (plan[g].size() > 1) name += "_" + std::to_string(l);
        stage.push_back(build_slot(plan[g][l], name, i, out, decode && last));
      }
      unit.stages.push_back(std::move(stage));
    }
  } else {
    const std::string g0 = prefix + ".g0", g1 = prefix + ".g1";
    switch (cfg.kind) {
      case GcKind::St: {
        StLayer l;
        l.adj = add_random_adjacency(store, g0 + ".adj", {J * T, J * T}, rng);
        l.tf = make_transform_mlp(store, g0 + ".map", in, out, rng, decode);
        unit.stages = {{l}};
        break;
      }
      case GcKind::S:
        unit.stages = {{make_static_spatial(store, g0, J, T, in, out, decode, rng)}};
        break;
      case GcKind::T:
        unit.stages = {{make_static_temporal(store, g0, J, T, in, out, decode, rng)}};
        break;
      case GcKind::Std:
      case GcKind::Tsd: {
        DecomposedLayer l;
        const bool sf = cfg.kind == GcKind::Std;
        l.order = sf ? DecomposedOrder::SpatialFirst : DecomposedOrder::TemporalFirst;
        l.spatial.adj = add_random_adjacency(store, g0 + ".s.adj", {T, J, J}, rng);
        l.temporal.adj = add_random_adjacency(store, g0 + ".t.adj", {J, T, T}, rng);
        // stage-one transform maps in->out, stage two out->out
        l.spatial.tf = make_transform_linear(store, g0 + ".s.map", sf ? in : out,
                                             out, rng, decode && !sf);
        l.temporal.tf = make_transform_linear(store, g0 + ".t.map", sf ? out : in,
                                              out, rng, decode && sf);
        unit.stages = {{l}};
        break;
      }
      case GcKind::Vstd: {
        DecomposedLayer l;
        l.order = DecomposedOrder::SpatialFirst;
        l.single_transform = true;
        l.spatial.adj = add_random_adjacency(store, g0 + ".s.adj", {J, J}, rng);
        l.temporal.adj = add_random_adjacency(store, g0 + ".t.adj", {T, T}, rng);
        l.spatial.tf = make_transform_mlp(store, g0 + ".map", in, out, rng, decode);
        unit.stages = {{l}};
        break;
      }
      case GcKind::Sts: {
        FactoredLayer l;
        l.adj_s = add_random_adjacency(store, g0 + ".s.adj", {T, J, J}, rng);
        l.adj_t = add_random_adjacency(store, g0 + ".t.adj", {J, T, T}, rng);
        l.tf = make_transform_mlp(store, g0 + ".map", in, out, rng, decode);
        l.conv = cfg.convention;
        unit.stages = {{l}};
        break;
      }
      case GcKind::Ds:
        unit.stages = {{dyn_spatial(g0, false, in, out, decode)}};
        break;
      case GcKind::Dt:
        unit.stages = {{dyn_temporal(g0, in, out, decode)}};
        break;
      case GcKind::Dstd:
        unit.stages = {{dyn_spatial(g0, false, in, out, false)},
                       {dyn_temporal(g1, out, out, decode)}};
        break;
      case GcKind::Dtsd:
        unit.stages = {{dyn_temporal(g0, in, out, false)},
                       {dyn_spatial(g1, false, out, out, decode)}};
        break;
    }
  }

  if (!decode)
    unit.slope = store.add(prefix + ".act", Tensor::scalar(0.25), true);
  return unit;
}

}  // namespace

// ------------------------------------------------------------------- names --

const char* to_string(GcKind k) {
  switch (k) {
    case GcKind::St: return "st";
    case GcKind::S: return "s";
    case GcKind::T: return "t";
    case GcKind::Std: return "std";
    case GcKind::Tsd: return "tsd";
    case GcKind::Vstd: return "vstd";
    case GcKind::Sts: return "sts";
    case GcKind::Ds: return "ds";
    case GcKind::Dt: return "dt";
    case GcKind::Dstd: return "dstd";
    case GcKind::Dtsd: return "dtsd";
  }
  return "?";
}

const char* to_string(ModelArch a) {
  return a == ModelArch::Compare ? "compare" : "full";
}

const char* to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::Full: return "full";
    case ModelVariant::ConstrainedOnly: return "constrained_only";
    case ModelVariant::DynamicOnly: return "dynamic_only";
    case ModelVariant::ReversedUpdate: return "reversed_update";
    case ModelVariant::NoPrior: return "no_prior";
    case ModelVariant::StaticGc: return "static";
    case ModelVariant::DsOnly: return "ds_only";
    case ModelVariant::DtOnly: return "dt_only";
  }
  return "?";
}

const char* to_string(IndexConvention c) {
  switch (c) {
    case IndexConvention::SourceFrame: return "source_frame";
    case IndexConvention::OutputFrame: return "output_frame";
    case IndexConvention::OutputJointTemporal: return "output_joint_temporal";
  }
  return "?";
}

namespace {
template <typename E>
E parse_enum(const std::string& s, const std::vector<E>& all,
             const std::string& what) {
  for (E e : all)
    if (s == to_string(e)) return e;
  std::string known;
  for (E e : all) known += std::string(known.empty() ? "" : ", ") + to_string(e);
  throw ConfigError("unknown " + what + " `" + s + "` (expected one of: " +
                    known + ")");
}
}  // namespace

GcKind parse_gc_kind(const std::string& s) {
  return parse_enum<GcKind>(
      s,
      {GcKind::St, GcKind::S, GcKind::T, GcKind::Std, GcKind::Tsd, GcKind::Vstd,
       GcKind::Sts, GcKind::Ds, GcKind::Dt, GcKind::Dstd, GcKind::Dtsd},
      "graph-convolution kind");
}

ModelArch parse_arch(const std::string& s) {
  return parse_enum<ModelArch>(s, {ModelArch::Compare, ModelArch::Full},
                               "architecture");
}

ModelVariant parse_variant(const std::string& s) {
  return parse_enum<ModelVariant>(
      s,
      {ModelVariant::Full, ModelVariant::ConstrainedOnly,
       ModelVariant::DynamicOnly, ModelVariant::ReversedUpdate,
       ModelVariant::NoPrior, ModelVariant::StaticGc, ModelVariant::DsOnly,
       ModelVariant::DtOnly},
      "model variant");
}

IndexConvention parse_convention(const std::string& s) {
  return parse_enum<IndexConvention>(
      s,
      {IndexConvention::SourceFrame, IndexConvention::OutputFrame,
       IndexConvention::OutputJointTemporal},
      "index convention");
}

// ------------------------------------------------------------------ config --

bool ModelConfig::needs_skeleton() const {
  if (arch == ModelArch::Compare)
    return kind == GcKind::Ds || kind == GcKind::Dstd || kind == GcKind::Dtsd;
  switch (variant) {
    case ModelVariant::Full:
    case ModelVariant::ConstrainedOnly:
    case ModelVariant::ReversedUpdate:
    case ModelVariant::DsOnly:
      return true;
    default:
      return false;
  }
}

void ModelConfig::validate() const {
  if (joints < 1 || past < 1 || future < 1 || coords < 1 || channels < 1 ||
      reduction < 1 || blocks < 1 || units_per_block < 1)
    throw ConfigError("model extents must all be >= 1");
  if (arch == ModelArch::Full && kind != GcKind::Dstd && kind != GcKind::Dtsd)
    throw ConfigError(
        "the full architecture supports kinds dstd and dtsd only");
  if (arch == ModelArch::Compare && variant != ModelVariant::Full)
    throw ConfigError("ablation variants apply to the full architecture only");
  if (skeleton.joints != 0) {
    skeleton.validate();
    if (skeleton.joints != joints)
      throw ConfigError("skeleton has " + std::to_string(skeleton.joints) +
                        " joints but the model is configured for " +
                        std::to_string(joints));
  } else if (needs_skeleton()) {
    throw ConfigError("this configuration needs a skeleton for spatial priors");
  }
}

// ------------------------------------------------------------------- build --

Model build_model(const ModelConfig& cfg) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng rng(cfg.seed);

  // degree-normalized initial values so stacked aggregations start at unit
  // gain; the trained matrices are free to leave this scale
  Priors pri;
  pri.context = normalize_adjacency(prior_temporal_context(cfg.frames()));
  pri.zero_s = Tensor({cfg.joints, cfg.joints});
  pri.zero_t = Tensor({cfg.frames(), cfg.frames()});
  if (cfg.needs_skeleton()) {
    pri.natural = normalize_adjacency(prior_spatial_natural(cfg.skeleton));
    pri.semantic = normalize_adjacency(prior_spatial_semantic(cfg.skeleton));
  }

  m.encode = make_unit(m.store, "enc", cfg, cfg.coords, cfg.channels, false,
                       rng, pri);
  for (int b = 0; b < cfg.blocks; ++b) {
    std::vector<GcUnit> blk;
    for (int u = 0; u < cfg.units_per_block; ++u)
      blk.push_back(make_unit(
          m.store, "blk" + std::to_string(b) + ".u" + std::to_string(u), cfg,
          cfg.channels, cfg.channels, false, rng, pri));
    m.blocks.push_back(std::move(blk));
  }
  m.decode = make_unit(m.store, "dec", cfg, cfg.channels, cfg.coords, true, rng,
                       pri);
  return m;
}

// ----------------------------------------------------------------- forward --

Var apply_layer(Tape& tape, VarCache& cache, const AnyLayer& layer, Var x) {
  return std::visit(
      [&](const auto& l) -> Var {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, DynamicLayerP>)
          return apply_dynamic(tape, cache, l, x).y;
        else
          return l.apply(tape, cache, x);
      },
      layer);
}

Var apply_unit(Tape& tape, VarCache& cache, const GcUnit& unit, Var x) {
  Var h = x;
  for (const auto& stage : unit.stages) {
    Var s = apply_layer(tape, cache, stage.front(), h);
    for (std::size_t l = 1; l < stage.size(); ++l)
      s = tape.add(s, apply_layer(tape, cache, stage[l], h));
    h = s;
  }
  if (unit.slope >= 0) h = tape.prelu(h, cache[unit.slope]);
  return h;
}

Var model_forward(Model& m, Tape& tape, VarCache& cache, Var input) {
  const Tensor& x = tape.value(input);
  if (x.ndim() != 3 || x.dim(0) != m.cfg.joints || x.dim(1) != m.cfg.frames() ||
      x.dim(2) != m.cfg.coords)
    throw ShapeError("model input must be [" + std::to_string(m.cfg.joints) +
                     " x " + std::to_string(m.cfg.frames()) + " x " +
                     std::to_string(m.cfg.coords) + "], got " + x.shape_str());
  Var h = apply_unit(tape, cache, m.encode, input);
  for (const auto& blk : m.blocks) {
    Var b = h;
    for (const auto& u : blk) b = apply_unit(tape, cache, u, b);
    h = tape.add(h, b);
  }
  Var y = apply_unit(tape, cache, m.decode, h);
  return tape.add(input, y);
}

Tensor predict_full(Model& m, const Tensor& input) {
  Tape tape;
  tape.set_recording(false);
  VarCache cache(tape, m.store);
  Var out = model_forward(m, tape, cache, tape.leaf(input));
  return tape.value(out);
}

MotionSequence forward_model(Model& m, const MotionSequence& observed) {
  observed.validate();
  if (observed.frames() != m.cfg.past)
    throw ShapeError("expected " + std::to_string(m.cfg.past) +
                     " observed frames, got " + std::to_string(observed.frames()));
  if (observed.joints() != m.cfg.joints || observed.coords() != m.cfg.coords)
    throw ShapeError("observed sequence shape " + observed.values.shape_str() +
                     " does not match the model");
  const MotionSequence input = duplicate_last_pose(observed, m.cfg.future);
  MotionSequence out;
  out.fps = observed.fps;
  out.values = predict_full(m, input.values);
  return out;
}

// ------------------------------------------------------------- param count --

std::size_t count_params(const Model& m) { return m.store.element_count(true); }

std::vector<std::pair<std::string, std::size_t>> param_breakdown(const Model& m) {
  return m.store.count_by_prefix();
}

namespace {

std::size_t lin_n(int i, int o) {
  return static_cast<std::size_t>(i) * o + o;
}
// two-layer MLP, hidden width = out, one hidden PReLU slope
std::size_t mlp_n(int i, int o) { return lin_n(i, o) + lin_n(o, o) + 1; }
// adjustment head: theta/phi projections, pair MLP (+slope)
std::size_t head_n(int fold, int in, int r) {
  const int c = compact_width(in, r);
  return 2 * lin_n(in, c) + lin_n(2 * fold * c, fold) + lin_n(fold, fold) + 1;
}
std::size_t ds_n(int J, int T, int in, int out, int r) {
  return static_cast<std::size_t>(J) * J + lin_n(in, out) + 1 + head_n(T, in, r);
}
std::size_t dt_n(int J, int T, int in, int out, int r) {
  return static_cast<std::size_t>(T) * T + lin_n(in, out) + 1 + head_n(J, in, r);
}

}  // namespace

std::size_t unit_param_formula(GcKind kind, int J, int T, int in, int out,
                               int r) {
  const std::size_t us = static_cast<std::size_t>(T) * J * J;  // unshared spatial
  const std::size_t ut = static_cast<std::size_t>(J) * T * T;  // unshared temporal
  switch (kind) {
    case GcKind::St:
      return static_cast<std::size_t>(J) * T * J * T + mlp_n(in, out);
    case GcKind::S: return us + lin_n(in, out);
    case GcKind::T: return ut + lin_n(in, out);
    case GcKind::Std:
    case GcKind::Tsd: return us + ut + lin_n(in, out) + lin_n(out, out);
    case GcKind::Vstd:
      return static_cast<std::size_t>(J) * J + static_cast<std::size_t>(T) * T +
             mlp_n(in, out);
    case GcKind::Sts: return us + ut + mlp_n(in, out);
    case GcKind::Ds: return ds_n(J, T, in, out, r);
    case GcKind::Dt: return dt_n(J, T, in, out, r);
    case GcKind::Dstd: return ds_n(J, T, in, out, r) + dt_n(J, T, out, out, r);
    case GcKind::Dtsd: return dt_n(J, T, in, out, r) + ds_n(J, T, out, out, r);
  }
  throw ConfigError("unreachable kind");
}

std::size_t model_param_formula(const ModelConfig& cfg) {
  if (cfg.variant != ModelVariant::Full)
    throw ConfigError("closed-form counts cover the unablated variant only");
  const int J = cfg.joints, T = cfg.frames(), r = cfg.reduction;
  auto unit = [&](int i, int o) -> std::size_t {
    if (cfg.arch == ModelArch::Compare)
      return unit_param_formula(cfg.kind, J, T, i, o, r);
    if (cfg.kind == GcKind::Dstd)
      return 2 * ds_n(J, T, i, o, r) + dt_n(J, T, o, o, r);
    return dt_n(J, T, i, o, r) + 2 * ds_n(J, T, o, o, r);
  };
  const std::size_t middles = static_cast<std::size_t>(cfg.blocks) *
                              cfg.units_per_block;
  return unit(cfg.coords, cfg.channels) +
         middles * unit(cfg.channels, cfg.channels) +
         unit(cfg.channels, cfg.coords) + (middles + 1);  // unit slopes
}

// -------------------------------------------------------------- checkpoint --

namespace {

constexpr char kMagic[] = "STGCCKP1\n";

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char b[8];
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw ParseError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void put_text(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_text(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw ParseError("checkpoint truncated");
  return s;
}

std::string config_text(const ModelConfig& cfg) {
  std::ostringstream out;
  out << "arch=" << to_string(cfg.arch) << '\n'
      << "kind=" << to_string(cfg.kind) << '\n'
      << "variant=" << to_string(cfg.variant) << '\n'
      << "convention=" << to_string(cfg.convention) << '\n'
      << "joints=" << cfg.joints << '\n'
      << "past=" << cfg.past << '\n'
      << "future=" << cfg.future << '\n'
      << "coords=" << cfg.coords << '\n'
      << "channels=" << cfg.channels << '\n'
      << "reduction=" << cfg.reduction << '\n'
      << "blocks=" << cfg.blocks << '\n'
      << "units_per_block=" << cfg.units_per_block << '\n'
      << "seed=" << cfg.seed << '\n';
  return out.str();
}

ModelConfig config_from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("bad checkpoint config line: " + line);
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "arch") cfg.arch = parse_arch(val);
    else if (key == "kind") cfg.kind = parse_gc_kind(val);
    else if (key == "variant") cfg.variant = parse_variant(val);
    else if (key == "convention") cfg.convention = parse_convention(val);
    else if (key == "joints") cfg.joints = std::stoi(val);
    else if (key == "past") cfg.past = std::stoi(val);
    else if (key == "future") cfg.future = std::stoi(val);
    else if (key == "coords") cfg.coords = std::stoi(val);
    else if (key == "channels") cfg.channels = std::stoi(val);
    else if (key == "reduction") cfg.reduction = std::stoi(val);
    else if (key == "blocks") cfg.blocks = std::stoi(val);
    else if (key == "units_per_block") cfg.units_per_block = std::stoi(val);
    else if (key == "seed") cfg.seed = std::stoull(val);
    else throw ParseError("unknown checkpoint config key: " + key);
  }
  return cfg;
}

}  // namespace

void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof kMagic - 1);
  put_text(out, config_text(m.cfg));
  put_text(out, m.cfg.skeleton.joints > 0 ? skeleton_to_string(m.cfg.skeleton)
                                          : std::string());
  put_u32(out, static_cast<std::uint32_t>(m.store.count()));
  for (int i = 0; i < m.store.count(); ++i) {
    const Param& p = m.store.at(i);
    put_text(out, p.name);
    out.put(p.trainable ? '\1' : '\0');
    put_u32(out, static_cast<std::uint32_t>(p.value.ndim()));
    for (int d : p.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : p.value.values()) put_f64(out, v);
  }
  if (!out) throw IoError("failed writing " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[sizeof kMagic - 1];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ParseError(path + " is not a model checkpoint");
  ModelConfig cfg = config_from_text(get_text(in));
  const std::string skel = get_text(in);
  if (!skel.empty()) {
    std::istringstream s(skel);
    cfg.skeleton = read_skeleton(s);
  }
  Model m = build_model(cfg);
  const std::uint32_t count = get_u32(in);
  if (static_cast<int>(count) != m.store.count())
    throw ParseError("checkpoint holds " + std::to_string(count) +
                     " parameters, model expects " +
                     std::to_string(m.store.count()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = get_text(in);
    const bool trainable = in.get() == '\1';
    const std::uint32_t ndim = get_u32(in);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(get_u32(in));
    const int id = m.store.find(name);
    if (id < 0) throw ParseError("checkpoint parameter `" + name +
                                 "` does not exist in the rebuilt model");
    Param& p = m.store.at(id);
    if (p.value.shape() != shape)
      throw ParseError("checkpoint parameter `" + name + "` has shape " +
                       Tensor(shape).shape_str() + ", model expects " +
                       p.value.shape_str());
    if (p.trainable != trainable)
      throw ParseError("checkpoint parameter `" + name +
                       "` trainability mismatch");
    for (double& v : p.value.values()) v = get_f64(in);
  }
  return m;
}

}  // namespace stgc
