#include "stgc/data.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stgc {
namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line,
                             const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(line) + ": " + what);
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void MotionSequence::validate() const {
  if (values.ndim() != 3)
    throw ShapeError("motion sequence values must be [J x T x D], got " +
                     values.shape_str());
  if (frames() < 1) throw ShapeError("motion sequence needs at least one frame");
  if (!(fps > 0)) throw ShapeError("motion sequence fps must be positive");
  if (!values.all_finite())
    throw ShapeError("motion sequence contains non-finite values");
}

MotionSequence read_mseq(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) parse_fail(origin, 1, "missing header");
  std::istringstream hdr(line);
  std::string magic, version;
  int joints = 0, frames = 0, coords = 0;
  double fps = 0.0;
  if (!(hdr >> magic >> version >> joints >> frames >> coords >> fps) ||
      magic != "mseq" || version != "v1")
    parse_fail(origin, 1, "expected header `mseq v1 J T D fps`");
  std::string extra;
  if (hdr >> extra) parse_fail(origin, 1, "trailing tokens after header");
  if (joints < 1 || frames < 1 || coords < 1 || !(fps > 0))
    parse_fail(origin, 1, "header extents must be positive");

  MotionSequence seq;
  seq.fps = fps;
  seq.values = Tensor({joints, frames, coords});
  for (int t = 0; t < frames; ++t) {
    const int lineno = t + 2;
    if (!std::getline(in, line))
      parse_fail(origin, lineno, "missing frame line (file truncated)");
    std::istringstream row(line);
    for (int j = 0; j < joints; ++j)
      for (int d = 0; d < coords; ++d) {
        double v = 0.0;
        if (!(row >> v))
          parse_fail(origin, lineno,
                     "expected " + std::to_string(joints * coords) +
                         " values per frame line");
        if (!std::isfinite(v)) parse_fail(origin, lineno, "non-finite value");
        seq.values(j, t, d) = v;
      }
    if (row >> extra) parse_fail(origin, lineno, "trailing tokens on frame line");
  }
  return seq;
}

MotionSequence read_mseq_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_mseq(in, path);
}

void write_mseq(const MotionSequence& seq, std::ostream& out) {
  seq.validate();
  out << "mseq v1 " << seq.joints() << ' ' << seq.frames() << ' '
      << seq.coords() << ' ' << fmt17(seq.fps) << '\n';
  for (int t = 0; t < seq.frames(); ++t) {
    for (int j = 0; j < seq.joints(); ++j)
      for (int d = 0; d < seq.coords(); ++d) {
        if (j != 0 || d != 0) out << ' ';
        out << fmt17(seq.values(j, t, d));
      }
    out << '\n';
  }
}

void write_mseq_file(const MotionSequence& seq, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_mseq(seq, out);
  if (!out) throw IoError("failed writing " + path);
}

MotionSequence duplicate_last_pose(const MotionSequence& seq, int extra) {
  seq.validate();
  if (extra < 0) throw ShapeError("cannot duplicate a negative frame count");
  const int J = seq.joints(), K = seq.frames(), D = seq.coords();
  MotionSequence out;
  out.fps = seq.fps;
  out.values = Tensor({J, K + extra, D});
  for (int j = 0; j < J; ++j) {
    for (int t = 0; t < K; ++t)
      for (int d = 0; d < D; ++d) out.values(j, t, d) = seq.values(j, t, d);
    for (int t = K; t < K + extra; ++t)
      for (int d = 0; d < D; ++d) out.values(j, t, d) = seq.values(j, K - 1, d);
  }
  return out;
}

MotionSequence slice_frames(const MotionSequence& seq, int t0, int t1) {
  if (t0 < 0 || t1 > seq.frames() || t0 >= t1)
    throw ShapeError("bad frame range [" + std::to_string(t0) + ", " +
                     std::to_string(t1) + ") for T=" +
                     std::to_string(seq.frames()));
  MotionSequence out;
  out.fps = seq.fps;
  out.values = Tensor({seq.joints(), t1 - t0, seq.coords()});
  for (int j = 0; j < seq.joints(); ++j)
    for (int t = t0; t < t1; ++t)
      for (int d = 0; d < seq.coords(); ++d)
        out.values(j, t - t0, d) = seq.values(j, t, d);
  return out;
}

MotionSequence concat_frames(const MotionSequence& a, const MotionSequence& b) {
  if (a.joints() != b.joints() || a.coords() != b.coords())
    throw ShapeError("concat needs matching joints/coords");
  MotionSequence out;
  out.fps = a.fps;
  out.values = Tensor({a.joints(), a.frames() + b.frames(), a.coords()});
  for (int j = 0; j < a.joints(); ++j) {
    for (int t = 0; t < a.frames(); ++t)
      for (int d = 0; d < a.coords(); ++d)
        out.values(j, t, d) = a.values(j, t, d);
    for (int t = 0; t < b.frames(); ++t)
      for (int d = 0; d < a.coords(); ++d)
        out.values(j, a.frames() + t, d) = b.values(j, t, d);
  }
  return out;
}

int ms_to_frame(double ms, double fps) {
  if (!(ms > 0)) throw ShapeError("horizon must be positive");
  if (!(fps > 0)) throw ShapeError("fps must be positive");
  const long frame = std::lround(ms * fps / 1000.0);
  if (frame < 1)
    throw ShapeError("horizon " + fmt17(ms) + " ms is shorter than one frame at " +
                     fmt17(fps) + " fps");
  return static_cast<int>(frame);
}

// --------------------------------------------------------- synthetic data --

void SyntheticSpec::validate() const {
  if (joints < 1 || past < 1 || future < 0 || !(fps > 0))
    throw ConfigError("synthetic spec extents must be positive");
  if (chains.empty()) throw ConfigError("synthetic spec needs at least one chain");
  if (frequencies.size() != chains.size() || amplitudes.size() != chains.size())
    throw ConfigError("need one frequency and one amplitude per chain");
  std::vector<char> seen(static_cast<std::size_t>(joints), 0);
  for (const auto& chain : chains) {
    if (chain.empty()) throw ConfigError("empty chain");
    for (int j : chain) {
      if (j < 0 || j >= joints)
        throw ConfigError("chain joint " + std::to_string(j) + " out of range");
      if (seen[static_cast<std::size_t>(j)])
        throw ConfigError("joint " + std::to_string(j) + " is in two chains");
      seen[static_cast<std::size_t>(j)] = 1;
    }
  }
  for (double a : amplitudes)
    if (!(a >= 0)) throw ConfigError("amplitudes must be >= 0");
  if (!(noise >= 0) || !(freq_jitter >= 0) || !(base_range >= 0))
    throw ConfigError("noise, jitter, and base range must be >= 0");
}

std::vector<SequencePair> synth_dataset(const SyntheticSpec& spec, int count) {
  spec.validate();
  if (count < 0) throw ConfigError("sequence count must be >= 0");
  const int J = spec.joints, D = 3, total = spec.past + spec.future;
  const std::size_t nchains = spec.chains.size();
  Rng rng(spec.seed);
  const double two_pi = 8.0 * std::atan(1.0);

  std::vector<SequencePair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    std::vector<double> freq(nchains);
    for (std::size_t c = 0; c < nchains; ++c)
      freq[c] = spec.frequencies[c] *
                (1.0 + spec.freq_jitter * uniform(rng, -1.0, 1.0));
    std::vector<double> phase(nchains * D);
    for (double& p : phase) p = uniform(rng, 0.0, two_pi);
    Tensor base({J, D});
    for (double& b : base.values())
      b = uniform(rng, -spec.base_range, spec.base_range);

    Tensor grid({J, total, D});
    for (int j = 0; j < J; ++j)
      for (int t = 0; t < total; ++t)
        for (int d = 0; d < D; ++d) grid(j, t, d) = base(j, d);
    for (std::size_t c = 0; c < nchains; ++c) {
      const auto& chain = spec.chains[c];
      for (std::size_t link = 0; link < chain.size(); ++link) {
        const int j = chain[link];
        for (int t = 0; t < total; ++t) {
          const double arg = two_pi * freq[c] * t / spec.fps +
                             static_cast<double>(link) * spec.lag;
          for (int d = 0; d < D; ++d)
            grid(j, t, d) += spec.amplitudes[c] *
                             std::sin(arg + phase[c * D + static_cast<std::size_t>(d)]);
        }
      }
    }
    if (spec.noise > 0)
      for (double& v : grid.values()) v += uniform(rng, -spec.noise, spec.noise);

    MotionSequence whole;
    whole.fps = spec.fps;
    whole.values = std::move(grid);
    SequencePair pair;
    pair.observed = slice_frames(whole, 0, spec.past);
    pair.future = slice_frames(whole, spec.past, total);
    out.push_back(std::move(pair));
  }
  return out;
}

// ---------------------------------------------------------------- manifest --

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream row(line);
    std::string split;
    if (!(row >> split) || split[0] == '#') continue;
    std::string rel;
    if (!(row >> rel)) parse_fail(path, lineno, "missing path after split name");
    std::string extra;
    if (row >> extra) parse_fail(path, lineno, "trailing tokens");
    std::filesystem::path p(rel);
    if (p.is_relative()) p = dir / p;
    if (split == "train")
      m.train.push_back(p.string());
    else if (split == "val")
      m.val.push_back(p.string());
    else if (split == "test")
      m.test.push_back(p.string());
    else
      parse_fail(path, lineno, "unknown split `" + split + "`");
  }
  return m;
}

void write_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& p : m.train) out << "train " << p << '\n';
  for (const auto& p : m.val) out << "val " << p << '\n';
  for (const auto& p : m.test) out << "test " << p << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace stgc
