#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stgc/data.hpp"

using namespace stgc;

TEST_CASE("mseq text round trip is bit exact") {
  MotionSequence seq;
  seq.fps = 30.0;
  Rng rng(51);
  seq.values = random_uniform({3, 4, 2}, -10, 10, rng);
  // values with no short decimal representation
  seq.values(0, 0, 0) = 1.0 / 3.0;
  seq.values(2, 3, 1) = -std::sqrt(2.0) * 1e-7;

  std::ostringstream out;
  write_mseq(seq, out);
  std::istringstream in(out.str());
  MotionSequence back = read_mseq(in);
  CHECK(back.fps == seq.fps);
  REQUIRE(back.values.same_shape(seq.values));
  for (std::size_t i = 0; i < seq.values.size(); ++i)
    CHECK(back.values[i] == seq.values[i]);  // exact, all 17 digits survive

  // file variant
  const std::string path = "build/test_data_roundtrip.mseq";
  write_mseq_file(seq, path);
  MotionSequence fb = read_mseq_file(path);
  std::remove(path.c_str());
  CHECK(max_abs_diff(fb.values, seq.values) == 0.0);

  const std::string text = out.str();
  CHECK(text.rfind("mseq v1 3 4 2 30", 0) == 0);
}

TEST_CASE("mseq parser rejects malformed input") {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_mseq(in);
  };
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("mseq v2 1 1 1 25\n0\n"), ParseError);
  CHECK_THROWS_AS(parse("mseq v1 1 1 1 25\n"), ParseError);        // missing row
  CHECK_THROWS_AS(parse("mseq v1 1 1 1 25\n0 1\n"), ParseError);   // extra value
  CHECK_THROWS_AS(parse("mseq v1 1 1 1 25\nabc\n"), ParseError);   // not a number
  CHECK_THROWS_AS(parse("mseq v1 0 1 1 25\n"), ParseError);        // empty grid
  CHECK_NOTHROW(parse("mseq v1 1 2 1 25\n0.5\n1.5\n"));
  CHECK_THROWS_AS(read_mseq_file("build/does_not_exist.mseq"), IoError);
}

TEST_CASE("pose duplication, slicing and concatenation") {
  MotionSequence seq;
  seq.values = Tensor::from({2, 3, 1}, {1, 2, 3, 4, 5, 6});

  MotionSequence dup = duplicate_last_pose(seq, 2);
  REQUIRE(dup.frames() == 5);
  CHECK(dup.values(0, 2, 0) == 3);
  CHECK(dup.values(0, 3, 0) == 3);
  CHECK(dup.values(0, 4, 0) == 3);
  CHECK(dup.values(1, 4, 0) == 6);
  CHECK(duplicate_last_pose(seq, 0).frames() == 3);

  MotionSequence mid = slice_frames(dup, 3, 5);
  REQUIRE(mid.frames() == 2);
  CHECK(mid.values(1, 0, 0) == 6);
  CHECK_THROWS_AS(slice_frames(seq, 2, 2), ShapeError);  // empty slice
  CHECK_THROWS_AS(slice_frames(seq, 1, 9), ShapeError);

  MotionSequence cat = concat_frames(seq, mid);
  REQUIRE(cat.frames() == 5);
  CHECK(max_abs_diff(cat.values, dup.values) == 0.0);
  MotionSequence other;
  other.values = Tensor({3, 1, 1});
  CHECK_THROWS_AS(concat_frames(seq, other), ShapeError);
}

TEST_CASE("millisecond horizons snap to frames") {
  CHECK(ms_to_frame(40, 25) == 1);
  CHECK(ms_to_frame(80, 25) == 2);
  CHECK(ms_to_frame(400, 25) == 10);
  CHECK(ms_to_frame(1000, 25) == 25);
  CHECK(ms_to_frame(560, 25) == 14);
  CHECK(ms_to_frame(100, 50) == 5);
  CHECK(ms_to_frame(50, 25) == 1);                     // rounds to nearest
  CHECK_THROWS_AS(ms_to_frame(10, 25), ShapeError);    // below half a frame
  CHECK_THROWS_AS(ms_to_frame(-100, 25), ShapeError);
}

TEST_CASE("synthetic sequences follow the stated kinematics") {
  SyntheticSpec spec;
  spec.joints = 5;
  spec.past = 4;
  spec.future = 6;
  spec.chains = {{0, 1, 2}, {3}};  // joint 4 unchained
  spec.frequencies = {1.5, 2.0};
  spec.amplitudes = {0.8, 0.5};
  spec.lag = 0.3;
  spec.seed = 9;

  auto data = synth_dataset(spec, 3);
  REQUIRE(data.size() == 3);
  for (const SequencePair& pair : data) {
    CHECK(pair.observed.frames() == 4);
    CHECK(pair.future.frames() == 6);
    CHECK(pair.observed.joints() == 5);
    CHECK(pair.observed.coords() == 3);
    CHECK(pair.observed.fps == spec.fps);
    CHECK(pair.observed.values.all_finite());
  }

  // the two windows form one continuous signal: with zero noise and jitter
  // the sine model fitted from the observed window extends into the future
  // window, so a chained joint keeps oscillating (not constant)
  const MotionSequence whole =
      concat_frames(data[0].observed, data[0].future);
  double span = 0;
  for (int t = 1; t < whole.frames(); ++t)
    span = std::max(span, std::abs(whole.values(0, t, 0) - whole.values(0, 0, 0)));
  CHECK(span > 1e-3);

  // unchained joint 4 stays at its constant offset
  for (int t = 1; t < whole.frames(); ++t)
    for (int d = 0; d < 3; ++d)
      CHECK(whole.values(4, t, d) == doctest::Approx(whole.values(4, 0, d)));

  // same seed reproduces the dataset exactly; different seed does not
  auto again = synth_dataset(spec, 3);
  CHECK(max_abs_diff(again[2].future.values, data[2].future.values) == 0.0);
  SyntheticSpec other = spec;
  other.seed = 10;
  auto alt = synth_dataset(other, 3);
  CHECK(max_abs_diff(alt[0].observed.values, data[0].observed.values) > 1e-6);

  // sequences within one dataset differ from each other
  CHECK(max_abs_diff(data[0].observed.values, data[1].observed.values) > 1e-6);

  SyntheticSpec bad = spec;
  bad.chains = {{0, 1}, {1, 2}};  // joint used twice
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.frequencies = {1.0};  // one entry for two chains
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.chains = {{0, 7}};  // out of range
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  // absolute so the write/read round trip does not re-resolve
  const std::string dir =
      std::filesystem::absolute("build/test_manifest_dir").string();
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/m.txt");
    out << "# dataset listing\n"
        << "train a.mseq\n"
        << "train sub/b.mseq\n"
        << "val c.mseq\n"
        << "test /abs/d.mseq\n";
  }
  Manifest m = read_manifest(dir + "/m.txt");
  REQUIRE(m.train.size() == 2);
  CHECK(m.train[0] == dir + "/a.mseq");
  CHECK(m.train[1] == dir + "/sub/b.mseq");
  REQUIRE(m.val.size() == 1);
  CHECK(m.val[0] == dir + "/c.mseq");
  REQUIRE(m.test.size() == 1);
  CHECK(m.test[0] == "/abs/d.mseq");

  write_manifest(m, dir + "/out.txt");
  Manifest back = read_manifest(dir + "/out.txt");
  CHECK(back.train == m.train);
  CHECK(back.val == m.val);
  CHECK(back.test == m.test);

  {
    std::ofstream out(dir + "/bad.txt");
    out << "eval x.mseq\n";
  }
  CHECK_THROWS_AS(read_manifest(dir + "/bad.txt"), ParseError);
  std::filesystem::remove_all(dir);
}
