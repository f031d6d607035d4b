#pragma once

// Motion-sequence values and I/O, pose duplication, horizon arithmetic, and
// seeded synthetic kinematic data for desk-scale experiments.
//
// MSEQ text format: header `mseq v1 J T D fps`, then T lines of J*D floats
// (joint-major, coordinates innermost) printed at 17 significant digits so the
// value grid round-trips bit-exactly.

#include <string>
#include <vector>

#include "stgc/common.hpp"
#include "stgc/tensor.hpp"

namespace stgc {

struct MotionSequence {
  double fps = 25.0;
  Tensor values;  // [J x T x D]

  int joints() const { return values.ndim() == 3 ? values.dim(0) : 0; }
  int frames() const { return values.ndim() == 3 ? values.dim(1) : 0; }
  int coords() const { return values.ndim() == 3 ? values.dim(2) : 0; }
  void validate() const;  // rank 3, T >= 1, finite values
};

MotionSequence read_mseq(std::istream& in, const std::string& origin = "<stream>");
MotionSequence read_mseq_file(const std::string& path);
void write_mseq(const MotionSequence& seq, std::ostream& out);
void write_mseq_file(const MotionSequence& seq, const std::string& path);

// Frames 1..K unchanged; frames K+1..K+L all copy frame K.
MotionSequence duplicate_last_pose(const MotionSequence& seq, int extra);

// Frame range [t0, t1) as a standalone sequence.
MotionSequence slice_frames(const MotionSequence& seq, int t0, int t1);
// a's frames followed by b's frames (same J, D, fps).
MotionSequence concat_frames(const MotionSequence& a, const MotionSequence& b);

// 1-based frame offset into the future window: round(ms * fps / 1000).
// Horizons shorter than half a frame round to 0 and are rejected.
int ms_to_frame(double ms, double fps);

// --------------------------------------------------------- synthetic data --

// Joints in a chain swing together: each follows
//   p(j,t,d) = c_jd + amplitude * sin(2*pi*f*t/fps + link*lag + phase_cd)
// where f is the chain's base frequency jittered per sequence, phase_cd is a
// per-sequence per-coordinate chain phase, c_jd a per-sequence joint offset,
// and `link` is the joint's position along its chain.  Unchained joints keep
// their constant offset.  Uniform noise in [-noise, noise] tops everything.
struct SyntheticSpec {
  int joints = 12;
  int past = 10;    // K observed frames
  int future = 25;  // L future frames
  double fps = 25.0;
  std::vector<std::vector<int>> chains;
  std::vector<double> frequencies;  // per chain, Hz
  std::vector<double> amplitudes;   // per chain, >= 0
  double lag = 0.4;                 // phase lag per link along a chain
  double freq_jitter = 0.0;         // fractional, per sequence per chain
  double base_range = 1.0;          // joint offsets drawn in [-range, range]
  double noise = 0.0;
  unsigned long long seed = 1;

  void validate() const;  // chains partition a subset of joints; sizes match
};

struct SequencePair {
  MotionSequence observed;  // K frames
  MotionSequence future;    // L frames
};

std::vector<SequencePair> synth_dataset(const SyntheticSpec& spec, int count);

// ---------------------------------------------------------------- manifest --

// Line-oriented dataset manifest: `train|val|test <path>` per line, `#`
// comments.  Relative paths are resolved against the manifest's directory.
struct Manifest {
  std::vector<std::string> train, val, test;
};

Manifest read_manifest(const std::string& path);
void write_manifest(const Manifest& m, const std::string& path);

}  // namespace stgc
