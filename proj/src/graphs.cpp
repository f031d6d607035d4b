#include "stgc/graphs.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace stgc {

const std::vector<int>* SkeletonSpec::find_limb(const std::string& name) const {
  for (const auto& [n, js] : limbs)
    if (n == name) return &js;
  return nullptr;
}

void SkeletonSpec::validate() const {
  if (joints <= 0) throw ParseError("skeleton: joint count must be positive");
  auto check_joint = [this](int j) {
    if (j < 0 || j >= joints)
      throw ParseError("skeleton: joint index out of range: " +
                       std::to_string(j));
  };
  std::set<std::pair<int, int>> seen;
  for (const auto& [p, q] : bones) {
    check_joint(p);
    check_joint(q);
    if (p == q) throw ParseError("skeleton: bone endpoints must differ");
    auto key = std::minmax(p, q);
    if (!seen.insert(key).second) throw ParseError("skeleton: duplicate bone");
  }
  std::set<std::string> names;
  for (const auto& [name, js] : limbs) {
    if (name.empty()) throw ParseError("skeleton: empty limb name");
    if (!names.insert(name).second)
      throw ParseError("skeleton: duplicate limb name: " + name);
    if (js.empty()) throw ParseError("skeleton: limb without joints: " + name);
    for (int j : js) check_joint(j);
  }
  for (const auto& [a, b] : mirrors) {
    if (!find_limb(a) || !find_limb(b))
      throw ParseError("skeleton: mirror references unknown limb: " + a + "/" + b);
  }
}

SkeletonSpec read_skeleton(std::istream& in) {
  SkeletonSpec spec;
  std::string line;
  int lineno = 0;
  bool have_joints = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    auto bad = [&](const std::string& why) {
      throw ParseError("skeleton line " + std::to_string(lineno) + ": " + why);
    };
    if (kw == "joints") {
      if (have_joints) bad("repeated joints directive");
      if (!(ls >> spec.joints)) bad("joints needs a count");
      have_joints = true;
    } else if (kw == "bone") {
      int p, q;
      if (!(ls >> p >> q)) bad("bone needs two joint indices");
      spec.bones.emplace_back(p, q);
    } else if (kw == "limb") {
      std::string name;
      if (!(ls >> name)) bad("limb needs a name");
      std::vector<int> js;
      int j;
      while (ls >> j) js.push_back(j);
      if (js.empty()) bad("limb needs at least one joint");
      spec.limbs.emplace_back(std::move(name), std::move(js));
    } else if (kw == "mirror") {
      std::string a, b;
      if (!(ls >> a >> b)) bad("mirror needs two limb names");
      spec.mirrors.emplace_back(std::move(a), std::move(b));
    } else {
      bad("unknown directive: " + kw);
    }
    std::string rest;
    if (ls >> rest) bad("trailing tokens: " + rest);
  }
  if (!have_joints) throw ParseError("skeleton: missing joints directive");
  spec.validate();
  return spec;
}

SkeletonSpec read_skeleton_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open skeleton file: " + path);
  return read_skeleton(in);
}

SkeletonSpec chain_skeleton(int joints) {
  if (joints < 1) throw ShapeError("chain skeleton needs at least one joint");
  SkeletonSpec spec;
  spec.joints = joints;
  std::vector<int> all(static_cast<std::size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    all[static_cast<std::size_t>(j)] = j;
    if (j + 1 < joints) spec.bones.emplace_back(j, j + 1);
  }
  spec.limbs.emplace_back("chain", std::move(all));
  spec.validate();
  return spec;
}

void write_skeleton(const SkeletonSpec& spec, std::ostream& out) {
  out << "joints " << spec.joints << "\n";
  for (const auto& [p, q] : spec.bones) out << "bone " << p << " " << q << "\n";
  for (const auto& [name, js] : spec.limbs) {
    out << "limb " << name;
    for (int j : js) out << " " << j;
    out << "\n";
  }
  for (const auto& [a, b] : spec.mirrors) out << "mirror " << a << " " << b << "\n";
}

std::string skeleton_to_string(const SkeletonSpec& spec) {
  std::ostringstream os;
  write_skeleton(spec, os);
  return os.str();
}

// ------------------------------------------------------------ prior graphs --

Tensor prior_spatial_natural(const SkeletonSpec& spec) {
  const int J = spec.joints;
  Tensor a(std::vector<int>{J, J});
  for (int j = 0; j < J; ++j) a(j, j) = 1.0;
  for (const auto& [p, q] : spec.bones) {
    a(p, q) = 1.0;
    a(q, p) = 1.0;
  }
  return a;
}

Tensor prior_spatial_semantic(const SkeletonSpec& spec) {
  const int J = spec.joints;
  Tensor a(std::vector<int>{J, J});
  for (int j = 0; j < J; ++j) a(j, j) = 1.0;
  for (const auto& [name, js] : spec.limbs)
    for (int p : js)
      for (int q : js) {
        a(p, q) = 1.0;
        a(q, p) = 1.0;
      }
  for (const auto& [na, nb] : spec.mirrors) {
    const auto& la = *spec.find_limb(na);
    const auto& lb = *spec.find_limb(nb);
    for (int p : la)
      for (int q : lb) {
        a(p, q) = 1.0;
        a(q, p) = 1.0;
      }
  }
  return a;
}

Tensor prior_temporal_context(int frames, int window) {
  if (frames <= 0) throw ShapeError("temporal prior needs positive frame count");
  if (window < 0) throw ShapeError("temporal prior needs non-negative window");
  Tensor a(std::vector<int>{frames, frames});
  for (int m = 0; m < frames; ++m)
    for (int n = 0; n < frames; ++n)
      if (std::abs(m - n) <= window) a(m, n) = 1.0;
  return a;
}

Tensor normalize_adjacency(const Tensor& a) {
  if (a.ndim() != 2 || a.dim(0) != a.dim(1))
    throw ShapeError("adjacency normalization needs a square matrix");
  const int n = a.dim(0);
  std::vector<double> scale(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int j = 0; j < n; ++j) deg += std::fabs(a(i, j));
    scale[static_cast<std::size_t>(i)] = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Tensor out(a.shape());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out(i, j) = scale[static_cast<std::size_t>(i)] * a(i, j) *
                  scale[static_cast<std::size_t>(j)];
  return out;
}

// ------------------------------------------------------------- adjacencies --

Tensor expand_vanilla_spatial(const Tensor& shared, int frames) {
  if (shared.ndim() != 2 || shared.dim(0) != shared.dim(1))
    throw ShapeError("vanilla spatial adjacency must be square");
  const int J = shared.dim(0);
  Tensor out(std::vector<int>{frames, J, J});
  for (int t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < shared.size(); ++i)
      out[static_cast<std::size_t>(t) * shared.size() + i] = shared[i];
  return out;
}

Tensor expand_vanilla_temporal(const Tensor& shared, int joints) {
  if (shared.ndim() != 2 || shared.dim(0) != shared.dim(1))
    throw ShapeError("vanilla temporal adjacency must be square");
  Tensor out(std::vector<int>{joints, shared.dim(0), shared.dim(1)});
  for (int j = 0; j < joints; ++j)
    for (std::size_t i = 0; i < shared.size(); ++i)
      out[static_cast<std::size_t>(j) * shared.size() + i] = shared[i];
  return out;
}

Tensor compose_spatiotemporal(const Tensor& a_s, const Tensor& a_t,
                              IndexConvention conv) {
  if (a_s.ndim() != 3 || a_s.dim(1) != a_s.dim(2))
    throw ShapeError("spatial weights must be [T x J x J]");
  if (a_t.ndim() != 3 || a_t.dim(1) != a_t.dim(2))
    throw ShapeError("temporal weights must be [J x T x T]");
  const int T = a_s.dim(0), J = a_s.dim(1);
  if (a_t.dim(0) != J || a_t.dim(1) != T)
    throw ShapeError("spatial/temporal weight shapes disagree");
  const int V = J * T;
  Tensor out(std::vector<int>{V, V});
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
          out(st_index(p, m, T), st_index(q, n, T)) = s * t;
        }
  return out;
}

}  // namespace stgc
