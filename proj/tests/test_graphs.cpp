#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stgc/graphs.hpp"

using namespace stgc;

TEST_CASE("skeleton text format round trip") {
  std::istringstream in(
      "# comment line\n"
      "joints   3\n"
      "bone 0 1\n\n"
      "bone 1 2   # trailing comment\n"
      "limb all 0 1 2\n");
  SkeletonSpec s = read_skeleton(in);
  CHECK(s.joints == 3);
  REQUIRE(s.bones.size() == 2);
  CHECK(s.bones[1] == std::pair<int, int>{1, 2});
  REQUIRE(s.limbs.size() == 1);
  CHECK(s.limbs[0].first == "all");
  CHECK(s.limbs[0].second == std::vector<int>{0, 1, 2});
  CHECK(skeleton_to_string(s) ==
        "joints 3\nbone 0 1\nbone 1 2\nlimb all 0 1 2\n");

  // shipped files are canonical: read/serialize reproduces the bytes
  std::ifstream f("configs/skeleton12.txt");
  REQUIRE(f.good());
  std::stringstream raw;
  raw << f.rdbuf();
  SkeletonSpec sk12 = read_skeleton_file("configs/skeleton12.txt");
  CHECK(sk12.joints == 12);
  CHECK(skeleton_to_string(sk12) == raw.str());
  REQUIRE(sk12.find_limb("left_arm") != nullptr);
  CHECK(*sk12.find_limb("left_arm") == std::vector<int>{4, 5});
  CHECK(sk12.find_limb("tail") == nullptr);
}

TEST_CASE("skeleton validation rejects malformed specs") {
  SkeletonSpec s;
  s.joints = 3;
  s.bones = {{0, 1}};
  s.limbs = {{"a", {0, 1}}};
  CHECK_NOTHROW(s.validate());

  SkeletonSpec bad = s;
  bad.bones.push_back({1, 3});  // out of range
  CHECK_THROWS_AS(bad.validate(), ParseError);
  bad = s;
  bad.bones.push_back({2, 2});  // self bone
  CHECK_THROWS_AS(bad.validate(), ParseError);
  bad = s;
  bad.bones.push_back({1, 0});  // duplicate regardless of direction
  CHECK_THROWS_AS(bad.validate(), ParseError);
  bad = s;
  bad.limbs.push_back({"a", {2}});  // duplicate limb name
  CHECK_THROWS_AS(bad.validate(), ParseError);
  bad = s;
  bad.mirrors.push_back({"a", "ghost"});
  CHECK_THROWS_AS(bad.validate(), ParseError);
  bad = s;
  bad.joints = 0;
  CHECK_THROWS_AS(bad.validate(), ParseError);
}

TEST_CASE("chain skeleton shape") {
  SkeletonSpec c = chain_skeleton(4);
  CHECK(c.joints == 4);
  REQUIRE(c.bones.size() == 3);
  CHECK(c.bones[0] == std::pair<int, int>{0, 1});
  CHECK(c.bones[2] == std::pair<int, int>{2, 3});
  REQUIRE(c.limbs.size() == 1);
  CHECK(c.limbs[0].second == std::vector<int>{0, 1, 2, 3});
  CHECK(c.mirrors.empty());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("prior graphs are 0/1 with self loops") {
  SkeletonSpec s = chain_skeleton(3);
  Tensor nat = prior_spatial_natural(s);
  // chain 0-1-2: self loops plus the two bone pairs, symmetric
  const double want_nat[9] = {1, 1, 0, 1, 1, 1, 0, 1, 1};
  REQUIRE(nat.shape() == std::vector<int>{3, 3});
  for (int i = 0; i < 9; ++i) CHECK(nat[i] == want_nat[i]);

  // two mirrored two-joint limbs plus one joint outside any limb
  SkeletonSpec m;
  m.joints = 5;
  m.bones = {{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  m.limbs = {{"l", {0, 1}}, {"r", {2, 3}}};
  m.mirrors = {{"l", "r"}};
  Tensor sem = prior_spatial_semantic(m);
  REQUIRE(sem.shape() == std::vector<int>{5, 5});
  for (int p = 0; p < 5; ++p)
    for (int q = 0; q < 5; ++q) {
      const bool in_block = p < 4 && q < 4;  // cliques + mirror cross links
      const double want = (p == q || in_block) ? 1.0 : 0.0;
      CHECK(sem(p, q) == want);
    }

  Tensor ctx = prior_temporal_context(4, 1);
  REQUIRE(ctx.shape() == std::vector<int>{4, 4});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(ctx(i, j) == (std::abs(i - j) <= 1 ? 1.0 : 0.0));
  Tensor ctx2 = prior_temporal_context(5, 2);
  CHECK(ctx2(0, 2) == 1.0);
  CHECK(ctx2(0, 3) == 0.0);
}

TEST_CASE("symmetric degree normalization") {
  Tensor a = Tensor::from({2, 2}, {1, 1, 1, 0});
  Tensor n = normalize_adjacency(a);
  CHECK(n(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(n(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(n(1, 1) == 0.0);

  // zero-degree rows must not produce NaN
  Tensor z = normalize_adjacency(Tensor::from({2, 2}, {0, 0, 0, 1}));
  CHECK(z.all_finite());
  CHECK(z(0, 0) == 0.0);
  CHECK(z(1, 1) == 1.0);

  // unit spectral gain: power iteration on the normalized chain prior must
  // converge to an eigenvalue of magnitude <= 1
  Tensor c = normalize_adjacency(prior_spatial_natural(chain_skeleton(6)));
  std::vector<double> v(6, 1.0);
  double lambda = 0;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> w(6, 0.0);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) w[i] += c(i, j) * v[j];
    lambda = 0;
    for (double x : w) lambda = std::max(lambda, std::abs(x));
    for (int i = 0; i < 6; ++i) v[i] = w[i] / lambda;
  }
  CHECK(lambda <= 1.0 + 1e-9);
  CHECK(lambda > 0.9);  // connected graph: top eigenvalue is exactly 1
}

TEST_CASE("vanilla adjacency broadcast") {
  Tensor shared = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor sp = expand_vanilla_spatial(shared, 3);
  REQUIRE(sp.shape() == std::vector<int>{3, 2, 2});
  for (int t = 0; t < 3; ++t) CHECK(sp(t, 1, 0) == 3.0);
  Tensor tp = expand_vanilla_temporal(shared, 4);
  REQUIRE(tp.shape() == std::vector<int>{4, 2, 2});
  for (int j = 0; j < 4; ++j) CHECK(tp(j, 0, 1) == 2.0);
}

TEST_CASE("joint-major vertex flattening") {
  CHECK(st_index(0, 0, 5) == 0);
  CHECK(st_index(0, 4, 5) == 4);
  CHECK(st_index(1, 0, 5) == 5);
  CHECK(st_index(3, 2, 7) == 23);
}

TEST_CASE("spatiotemporal composition per index convention") {
  const int J = 2, T = 3;
  Rng rng(7);
  Tensor a_s = random_uniform({T, J, J}, -1, 1, rng);
  Tensor a_t = random_uniform({J, T, T}, -1, 1, rng);

  auto check_all = [&](IndexConvention conv) {
    Tensor full = compose_spatiotemporal(a_s, a_t, conv);
    REQUIRE(full.shape() == std::vector<int>{J * T, J * T});
    for (int p = 0; p < J; ++p)
      for (int m = 0; m < T; ++m)
        for (int q = 0; q < J; ++q)
          for (int n = 0; n < T; ++n) {
            const double s = conv == IndexConvention::SourceFrame
                                 ? a_s(m, p, q)
                                 : a_s(n, p, q);
            const double t = conv == IndexConvention::OutputJointTemporal
                                 ? a_t(p, m, n)
                                 : a_t(q, m, n);
            CHECK(full(st_index(p, m, T), st_index(q, n, T)) ==
                  doctest::Approx(s * t).epsilon(1e-15));
          }
  };
  check_all(IndexConvention::SourceFrame);
  check_all(IndexConvention::OutputFrame);
  check_all(IndexConvention::OutputJointTemporal);

  // conventions genuinely differ on generic weights
  Tensor a = compose_spatiotemporal(a_s, a_t, IndexConvention::SourceFrame);
  Tensor b = compose_spatiotemporal(a_s, a_t, IndexConvention::OutputFrame);
  CHECK(max_abs_diff(a, b) > 1e-3);

  CHECK_THROWS_AS(
      compose_spatiotemporal(Tensor({T, J, J + 1}), a_t, IndexConvention::SourceFrame),
      ShapeError);
  CHECK_THROWS_AS(
      compose_spatiotemporal(a_s, Tensor({J + 1, T, T}), IndexConvention::SourceFrame),
      ShapeError);
}
