#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stgc/train.hpp"

using namespace stgc;

namespace {

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.joints = 6;
  cfg.past = 3;
  cfg.future = 4;
  cfg.channels = 6;
  cfg.reduction = 3;
  cfg.blocks = 1;
  cfg.skeleton = chain_skeleton(6);
  return cfg;
}

std::vector<SequencePair> tiny_data(int count, unsigned long long seed = 1) {
  SyntheticSpec spec;
  spec.joints = 6;
  spec.past = 3;
  spec.future = 4;
  spec.chains = {{0, 1, 2}, {3, 4, 5}};
  spec.frequencies = {1.0, 1.6};
  spec.amplitudes = {0.7, 0.5};
  spec.seed = seed;
  return synth_dataset(spec, count);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("loss span names round trip") {
  CHECK(parse_loss_span(to_string(LossSpan::FullSequence)) ==
        LossSpan::FullSequence);
  CHECK(parse_loss_span(to_string(LossSpan::FutureOnly)) == LossSpan::FutureOnly);
  CHECK_THROWS_AS(parse_loss_span("sometimes"), ConfigError);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  TrainConfig bad = cfg;
  bad.lr = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.beta1 = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.threads = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.batch = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("mpjpe hand values") {
  MotionSequence truth;
  truth.values = Tensor({2, 3, 3});
  MotionSequence pred = truth;
  pred.values(0, 1, 0) = 3.0;
  pred.values(0, 1, 1) = 4.0;  // one joint displaced by a 3-4-5 vector

  // the displaced frame averages over 2 joints: 5 / 2
  CHECK(mpjpe(pred, truth, 1, 2) == doctest::Approx(2.5));
  // two-frame window dilutes it across 2 joints x 2 frames
  CHECK(mpjpe(pred, truth, 1, 3) == doctest::Approx(1.25));
  // window without the displacement
  CHECK(mpjpe(pred, truth, 2, 3) == 0.0);
  CHECK(mpjpe(pred, truth, 0, 3) == doctest::Approx(5.0 / 6.0));

  // rotating every displacement leaves the metric unchanged
  const double c = std::cos(0.7), s = std::sin(0.7);
  MotionSequence rpred = truth;
  rpred.values(0, 1, 0) = 3.0 * c - 4.0 * s;
  rpred.values(0, 1, 1) = 3.0 * s + 4.0 * c;
  CHECK(mpjpe(rpred, truth, 0, 3) ==
        doctest::Approx(mpjpe(pred, truth, 0, 3)).epsilon(1e-12));

  CHECK_THROWS_AS(mpjpe(pred, truth, 2, 2), ShapeError);
  CHECK_THROWS_AS(mpjpe(pred, truth, 0, 4), ShapeError);
  MotionSequence other;
  other.values = Tensor({2, 2, 3});
  CHECK_THROWS_AS(mpjpe(pred, other, 0, 1), ShapeError);
}

TEST_CASE("zero-velocity baseline repeats the last pose") {
  MotionSequence obs;
  obs.values = Tensor::from({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  MotionSequence zv = zero_velocity(obs, 4);
  REQUIRE(zv.frames() == 4);
  for (int t = 0; t < 4; ++t)
    for (int d = 0; d < 3; ++d) CHECK(zv.values(0, t, d) == obs.values(0, 2, d));
}

TEST_CASE("first optimizer step is bounded by the learning rate") {
  Model m = build_model(tiny_cfg());
  std::vector<Tensor> before;
  for (int i = 0; i < m.store.count(); ++i)
    before.push_back(m.store.at(i).value);

  TrainConfig tc;
  tc.epochs = 1;
  tc.batch = 64;  // one update covering the whole dataset
  tc.lr = 1e-2;
  auto hist = train(m, tiny_data(8), tc);
  REQUIRE(hist.size() == 1);
  CHECK(hist[0].epoch == 1);
  CHECK(hist[0].lr == tc.lr);
  CHECK(hist[0].loss > 0);

  // Adam's first update is lr * g / (|g| + eps) elementwise, so no element
  // may move farther than lr
  double max_step = 0.0;
  bool moved = false;
  for (int i = 0; i < m.store.count(); ++i) {
    const Tensor& now = m.store.at(i).value;
    const Tensor& was = before[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < now.size(); ++k) {
      max_step = std::max(max_step, std::abs(now[k] - was[k]));
      if (now[k] != was[k]) moved = true;
    }
    if (!m.store.at(i).trainable)
      CHECK(max_abs_diff(now, was) == 0.0);  // frozen parameters stay put
  }
  CHECK(moved);
  CHECK(max_step <= tc.lr * (1.0 + 1e-9));
}

TEST_CASE("learning-rate schedule steps down") {
  Model m = build_model(tiny_cfg());
  TrainConfig tc;
  tc.epochs = 7;
  tc.decay = 0.5;
  tc.decay_every = 3;
  auto hist = train(m, tiny_data(4), tc);
  REQUIRE(hist.size() == 7);
  CHECK(hist[0].lr == tc.lr);
  CHECK(hist[2].lr == tc.lr);
  CHECK(hist[3].lr == doctest::Approx(tc.lr * 0.5));
  CHECK(hist[6].lr == doctest::Approx(tc.lr * 0.25));
}

TEST_CASE("training is reproducible and thread-count invariant") {
  auto run = [&](int threads) {
    Model m = build_model(tiny_cfg());
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch = 3;  // uneven tail batch included
    tc.threads = threads;
    auto hist = train(m, tiny_data(8), tc);
    std::vector<double> out;
    for (const auto& e : hist) out.push_back(e.loss);
    for (int i = 0; i < m.store.count(); ++i)
      for (std::size_t k = 0; k < m.store.at(i).value.size(); ++k)
        out.push_back(m.store.at(i).value[k]);
    return out;
  };
  const auto a = run(1);
  const auto b = run(1);
  CHECK(a == b);  // bitwise identical
  const auto c = run(2);
  CHECK(a == c);  // sample-ordered reduction: threads do not change results
}

TEST_CASE("training reduces the loss on a learnable problem") {
  // fast oscillations make the frozen-pose starting point clearly beatable
  SyntheticSpec spec;
  spec.joints = 6;
  spec.past = 3;
  spec.future = 4;
  spec.chains = {{0, 1, 2}, {3, 4, 5}};
  spec.frequencies = {2.8, 3.6};
  spec.amplitudes = {0.9, 0.7};
  spec.seed = 3;
  auto data = synth_dataset(spec, 16);

  Model m = build_model(tiny_cfg());
  TrainConfig tc;
  tc.epochs = 20;
  tc.batch = 8;
  tc.lr = 1e-2;
  auto hist = train(m, data, tc);
  REQUIRE(hist.size() == 20);
  CHECK(hist.back().loss < 0.8 * hist.front().loss);
  for (const auto& e : hist) CHECK(std::isfinite(e.loss));
}

TEST_CASE("diverging runs abort instead of returning garbage") {
  Model m = build_model(tiny_cfg());
  TrainConfig tc;
  tc.epochs = 3;
  tc.lr = 1e80;  // first update pushes features past the double range
  CHECK_THROWS_AS(train(m, tiny_data(4), tc), TrainError);
}

TEST_CASE("fresh model evaluates exactly like the zero-velocity baseline") {
  Model m = build_model(tiny_cfg());
  auto data = tiny_data(6);
  const std::vector<double> horizons = {40, 80, 160};
  EvalReport mr = evaluate(m, data, horizons);
  EvalReport zr = evaluate_zero_velocity(data, 4, horizons);
  REQUIRE(mr.horizons.size() == 3);
  REQUIRE(zr.horizons.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(mr.horizons[i].first == zr.horizons[i].first);
    CHECK(mr.horizons[i].second == zr.horizons[i].second);  // exact
  }
  CHECK(mr.average == zr.average);
  CHECK(mr.average > 0);
  CHECK(mr.mean_forward_seconds > 0);
  CHECK(zr.mean_forward_seconds == 0.0);
}

TEST_CASE("report serialization formats") {
  EvalReport rep;
  rep.horizons = {{80, 0.125}, {160, 0.25}};
  rep.average = 0.1875;
  rep.mean_forward_seconds = 0.001;
  const std::string table = eval_table(rep);
  CHECK(table.find("horizon_ms") != std::string::npos);
  CHECK(table.find("0.1250") != std::string::npos);
  CHECK(table.find("average") != std::string::npos);
  CHECK(table.find("forward:") != std::string::npos);
  rep.mean_forward_seconds = 0.0;  // baseline reports omit timing
  CHECK(eval_table(rep).find("forward:") == std::string::npos);

  write_eval_csv(rep, "build/test_train_eval.csv");
  CHECK(slurp("build/test_train_eval.csv") ==
        "horizon_ms,mpjpe\n80,0.125\n160,0.25\naverage,0.1875\n");
  std::remove("build/test_train_eval.csv");

  std::vector<EpochStat> hist = {{1, 0.5, 3e-3}, {2, 0.25, 3e-3}};
  write_loss_csv(hist, "build/test_train_loss.csv");
  CHECK(slurp("build/test_train_loss.csv") ==
        "epoch,loss,lr\n1,0.5,0.0030000000000000001\n2,0.25,"
        "0.0030000000000000001\n");
  std::remove("build/test_train_loss.csv");
}
