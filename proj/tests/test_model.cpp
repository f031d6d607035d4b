#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "stgc/model.hpp"

using namespace stgc;

namespace {

ModelConfig compare_cfg(GcKind kind) {
  ModelConfig cfg;
  cfg.arch = ModelArch::Compare;
  cfg.kind = kind;
  if (cfg.needs_skeleton())
    cfg.skeleton = read_skeleton_file("configs/skeleton25.txt");
  return cfg;
}

ModelConfig small_full(ModelVariant variant = ModelVariant::Full,
                       GcKind kind = GcKind::Dstd) {
  ModelConfig cfg;
  cfg.joints = 12;
  cfg.past = 4;
  cfg.future = 6;
  cfg.channels = 8;
  cfg.reduction = 4;
  cfg.blocks = 2;
  cfg.kind = kind;
  cfg.variant = variant;
  if (cfg.needs_skeleton())
    cfg.skeleton = read_skeleton_file("configs/skeleton12.txt");
  return cfg;
}

bool any_param_with_prefix(const Model& m, const std::string& piece) {
  for (int i = 0; i < m.store.count(); ++i)
    if (m.store.at(i).name.find(piece) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("enum names round trip") {
  for (GcKind k : {GcKind::St, GcKind::S, GcKind::T, GcKind::Std, GcKind::Tsd,
                   GcKind::Vstd, GcKind::Sts, GcKind::Ds, GcKind::Dt,
                   GcKind::Dstd, GcKind::Dtsd})
    CHECK(parse_gc_kind(to_string(k)) == k);
  for (ModelArch a : {ModelArch::Compare, ModelArch::Full})
    CHECK(parse_arch(to_string(a)) == a);
  for (ModelVariant v :
       {ModelVariant::Full, ModelVariant::ConstrainedOnly,
        ModelVariant::DynamicOnly, ModelVariant::ReversedUpdate,
        ModelVariant::NoPrior, ModelVariant::StaticGc, ModelVariant::DsOnly,
        ModelVariant::DtOnly})
    CHECK(parse_variant(to_string(v)) == v);
  for (IndexConvention c :
       {IndexConvention::SourceFrame, IndexConvention::OutputFrame,
        IndexConvention::OutputJointTemporal})
    CHECK(parse_convention(to_string(c)) == c);
  CHECK_THROWS_AS(parse_gc_kind("nope"), ConfigError);
  CHECK_THROWS_AS(parse_variant(""), ConfigError);
}

TEST_CASE("config validation") {
  ModelConfig cfg;
  cfg.skeleton = read_skeleton_file("configs/skeleton25.txt");
  CHECK_NOTHROW(cfg.validate());

  ModelConfig bad = cfg;
  bad.channels = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.arch = ModelArch::Full;
  bad.kind = GcKind::S;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.arch = ModelArch::Compare;
  bad.kind = GcKind::St;
  bad.variant = ModelVariant::StaticGc;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = compare_cfg(GcKind::Ds);
  bad.skeleton = SkeletonSpec{};
  CHECK_THROWS_AS(bad.validate(), ConfigError);  // prior needs a skeleton
  bad = cfg;
  bad.joints = 24;  // skeleton says 25
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(cfg.frames() == 35);
  CHECK(cfg.units() == 7);
}

TEST_CASE("trainable parameter counts for the single-kind zoo") {
  // defaults: 25 joints, 35 frames, 64 channels, reduction 32, 7 units
  const std::pair<GcKind, std::size_t> anchors[] = {
      {GcKind::St, 5405611},  {GcKind::S, 174382},    {GcKind::T, 235632},
      {GcKind::Std, 413729},  {GcKind::Tsd, 413729},  {GcKind::Vstd, 59186},
      {GcKind::Sts, 413736},  {GcKind::Ds, 68129},    {GcKind::Dt, 52389},
      {GcKind::Dstd, 124233}, {GcKind::Dtsd, 124233},
  };
  for (const auto& [kind, want] : anchors) {
    ModelConfig cfg = compare_cfg(kind);
    Model m = build_model(cfg);
    CHECK_MESSAGE(count_params(m) == want, to_string(kind));
    CHECK(count_params(m) == m.store.element_count(true));

    // closed-form unit counts: encode + middle units + decode + one PReLU
    // slope per non-decode unit
    const std::size_t formula =
        unit_param_formula(kind, 25, 35, 3, 64, 32) +
        5 * unit_param_formula(kind, 25, 35, 64, 64, 32) +
        unit_param_formula(kind, 25, 35, 64, 3, 32) + 6;
    CHECK_MESSAGE(count_params(m) == formula, to_string(kind));

    std::size_t sum = 0;
    for (const auto& [prefix, n] : param_breakdown(m)) sum += n;
    CHECK(sum == count_params(m));
  }

  // identical storage between the two stacked-dynamic orders
  CHECK(unit_param_formula(GcKind::Dstd, 25, 35, 64, 64, 32) ==
        unit_param_formula(GcKind::Dtsd, 25, 35, 64, 64, 32));
}

TEST_CASE("full architecture parameter counts") {
  ModelConfig cfg;
  cfg.skeleton = read_skeleton_file("configs/skeleton25.txt");
  Model m = build_model(cfg);
  CHECK(count_params(m) == 192356);
  CHECK(model_param_formula(cfg) == 192356);

  ModelConfig c22 = cfg;
  c22.joints = 22;
  c22.skeleton = read_skeleton_file("configs/skeleton22.txt");
  Model m22 = build_model(c22);
  CHECK(count_params(m22) == 185687);
  CHECK(model_param_formula(c22) == 185687);

  ModelConfig abl = cfg;
  abl.variant = ModelVariant::StaticGc;
  CHECK_THROWS_AS(model_param_formula(abl), ConfigError);
}

TEST_CASE("full architecture unit structure") {
  Model m = build_model(small_full());
  CHECK(m.blocks.size() == 2);
  REQUIRE(m.blocks[0].size() == 1);
  const GcUnit& u = m.blocks[0][0];
  REQUIRE(u.stages.size() == 2);
  REQUIRE(u.stages[0].size() == 2);  // parallel natural + semantic branches
  REQUIRE(u.stages[1].size() == 1);
  for (const AnyLayer& l : u.stages[0]) {
    REQUIRE(std::holds_alternative<DynamicLayerP>(l));
    CHECK(std::get<DynamicLayerP>(l).axis == Axis::Spatial);
  }
  CHECK(std::get<DynamicLayerP>(u.stages[1][0]).axis == Axis::Temporal);
  CHECK(u.slope >= 0);
  CHECK(m.decode.slope == -1);  // no activation after decode

  // mirrored order: temporal stage first
  Model mt = build_model(small_full(ModelVariant::Full, GcKind::Dtsd));
  const GcUnit& ut = mt.blocks[0][0];
  CHECK(std::get<DynamicLayerP>(ut.stages[0][0]).axis == Axis::Temporal);
  REQUIRE(ut.stages[1].size() == 2);
  CHECK(std::get<DynamicLayerP>(ut.stages[1][0]).axis == Axis::Spatial);
}

TEST_CASE("ablation variants change exactly the advertised pieces") {
  Model full = build_model(small_full());

  // adjustment path off: no head parameters, every alpha frozen at zero
  Model a = build_model(small_full(ModelVariant::ConstrainedOnly));
  CHECK_FALSE(any_param_with_prefix(a, ".theta"));
  CHECK(any_param_with_prefix(full, ".theta"));
  for (int i = 0; i < a.store.count(); ++i) {
    const Param& p = a.store.at(i);
    if (p.name.find(".alpha") != std::string::npos) {
      CHECK_FALSE(p.trainable);
      CHECK(p.value[0] == 0.0);
    }
  }

  // shared correlations frozen at zero, adjustment path intact
  Model b = build_model(small_full(ModelVariant::DynamicOnly));
  CHECK(any_param_with_prefix(b, ".theta"));
  for (int i = 0; i < b.store.count(); ++i) {
    const Param& p = b.store.at(i);
    if (p.name.find(".corr") != std::string::npos) {
      CHECK_FALSE(p.trainable);
      CHECK(max_abs(p.value) == 0.0);
    }
  }

  // random correlation init: differs from the prior used by the full model
  Model d = build_model(small_full(ModelVariant::NoPrior));
  bool corr_differs = false;
  for (int i = 0; i < d.store.count(); ++i) {
    const Param& p = d.store.at(i);
    if (p.name.find(".corr") == std::string::npos) continue;
    const int fid = full.store.find(p.name);
    if (fid >= 0 &&
        max_abs_diff(p.value, full.store.at(fid).value) > 1e-6)
      corr_differs = true;
  }
  CHECK(corr_differs);

  // static swap: no dynamic layers left
  Model e = build_model(small_full(ModelVariant::StaticGc));
  for (const auto& block : e.blocks)
    for (const GcUnit& unit : block)
      for (const auto& stage : unit.stages)
        for (const AnyLayer& l : stage)
          CHECK_FALSE(std::holds_alternative<DynamicLayerP>(l));
  CHECK_FALSE(any_param_with_prefix(e, ".alpha"));

  // single-axis variants
  Model f = build_model(small_full(ModelVariant::DsOnly));
  for (const auto& stage : f.blocks[0][0].stages)
    for (const AnyLayer& l : stage)
      CHECK(std::get<DynamicLayerP>(l).axis == Axis::Spatial);
  Model g = build_model(small_full(ModelVariant::DtOnly));
  for (const auto& stage : g.blocks[0][0].stages)
    for (const AnyLayer& l : stage)
      CHECK(std::get<DynamicLayerP>(l).axis == Axis::Temporal);
}

TEST_CASE("fresh models predict zero velocity exactly") {
  // decode starts zero-initialized, so the global residual passes the
  // duplicated input through untouched
  Model m = build_model(small_full());
  Rng rng(71);
  MotionSequence obs;
  obs.values = random_uniform({12, 4, 3}, -1, 1, rng);
  MotionSequence pred = forward_model(m, obs);
  REQUIRE(pred.values.shape() == std::vector<int>{12, 10, 3});
  for (int j = 0; j < 12; ++j)
    for (int t = 0; t < 10; ++t)
      for (int c = 0; c < 3; ++c) {
        const double want = obs.values(j, t < 4 ? t : 3, c);
        CHECK(pred.values(j, t, c) == want);  // exact, not approximate
      }

  MotionSequence wrong;
  wrong.values = Tensor({12, 5, 3});
  CHECK_THROWS_AS(forward_model(m, wrong), ShapeError);
  MotionSequence badj;
  badj.values = Tensor({11, 4, 3});
  CHECK_THROWS_AS(forward_model(m, badj), ShapeError);
}

TEST_CASE("same seed builds bitwise-identical models") {
  ModelConfig cfg = small_full();
  Model m1 = build_model(cfg);
  Model m2 = build_model(cfg);
  REQUIRE(m1.store.count() == m2.store.count());
  for (int i = 0; i < m1.store.count(); ++i) {
    CHECK(m1.store.at(i).name == m2.store.at(i).name);
    CHECK(max_abs_diff(m1.store.at(i).value, m2.store.at(i).value) == 0.0);
  }

  ModelConfig other = cfg;
  other.seed = 2;
  Model m3 = build_model(other);
  bool differs = false;
  for (int i = 0; i < m1.store.count(); ++i)
    if (m1.store.at(i).value.size() &&
        max_abs_diff(m1.store.at(i).value, m3.store.at(i).value) > 0)
      differs = true;
  CHECK(differs);
}

TEST_CASE("checkpoint round trip preserves parameters and predictions") {
  Model m = build_model(small_full());
  Rng rng(72);
  // perturb away from init so the round trip is not trivially zeros
  for (int i = 0; i < m.store.count(); ++i) {
    Tensor& v = m.store.at(i).value;
    for (std::size_t k = 0; k < v.size(); ++k)
      v[k] += uniform(rng, -0.01, 0.01);
  }
  Tensor input = random_uniform({12, 10, 3}, -1, 1, rng);
  Tensor before = predict_full(m, input);

  const std::string path = "build/test_model_ckpt.bin";
  save_checkpoint(m, path);
  Model r = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(r.cfg.joints == m.cfg.joints);
  CHECK(r.cfg.kind == m.cfg.kind);
  CHECK(r.cfg.variant == m.cfg.variant);
  CHECK(skeleton_to_string(r.cfg.skeleton) == skeleton_to_string(m.cfg.skeleton));
  REQUIRE(r.store.count() == m.store.count());
  for (int i = 0; i < m.store.count(); ++i) {
    CHECK(r.store.at(i).name == m.store.at(i).name);
    CHECK(max_abs_diff(r.store.at(i).value, m.store.at(i).value) == 0.0);
    CHECK(r.store.at(i).trainable == m.store.at(i).trainable);
  }
  CHECK(max_abs_diff(predict_full(r, input), before) == 0.0);

  CHECK_THROWS_AS(load_checkpoint("build/no_such_ckpt.bin"), IoError);
}
