#pragma once

// Skeleton description + prior connection graphs + adjacency plumbing.
//
// Joint/frame flattening convention used everywhere a spatiotemporal vertex
// set appears: vertex = joint * T + frame (joint-major).

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stgc/autograd.hpp"
#include "stgc/tensor.hpp"

namespace stgc {

struct SkeletonSpec {
  int joints = 0;
  std::vector<std::pair<int, int>> bones;
  std::vector<std::pair<std::string, std::vector<int>>> limbs;
  std::vector<std::pair<std::string, std::string>> mirrors;

  const std::vector<int>* find_limb(const std::string& name) const;
  void validate() const;
};

// Text format, one directive per line ('#' starts a comment):
//   joints N
//   bone P Q
//   limb NAME J1 J2 ...
//   mirror NAME1 NAME2
// write_skeleton emits the canonical form (that order, single spaces); files
// shipped in canonical form survive a read/write round trip byte-for-byte.
SkeletonSpec read_skeleton(std::istream& in);
SkeletonSpec read_skeleton_file(const std::string& path);
// Fallback skeleton for size sweeps: joints 0..n-1 strung on one chain, a
// single limb covering all of them, no mirrors.
SkeletonSpec chain_skeleton(int joints);
void write_skeleton(const SkeletonSpec& spec, std::ostream& out);
std::string skeleton_to_string(const SkeletonSpec& spec);

// ------------------------------------------------------------ prior graphs --

// 0/1 matrices with self-loops, no normalization.
// Natural: bone-connected joint pairs.
Tensor prior_spatial_natural(const SkeletonSpec& spec);
// Semantic: each limb forms a clique; mirrored limb groups are fully
// cross-connected.
Tensor prior_spatial_semantic(const SkeletonSpec& spec);
// Context: frames within `window` steps of each other.
Tensor prior_temporal_context(int frames, int window = 1);

// Symmetric degree normalization d^-1/2 * a * d^-1/2 of a square matrix.
// Aggregating with a raw 0/1 prior multiplies feature magnitude by the vertex
// degree, which compounds across stacked units; normalized initial values
// keep the connection pattern but a unit gain.  Zero-degree rows stay zero.
Tensor normalize_adjacency(const Tensor& a);

// ------------------------------------------------------------- adjacencies --

// Vanilla (shared) [J x J] -> unshared [T x J x J] broadcast, and the
// temporal mirror [T x T] -> [J x T x T].
Tensor expand_vanilla_spatial(const Tensor& shared, int frames);
Tensor expand_vanilla_temporal(const Tensor& shared, int joints);

inline int st_index(int joint, int frame, int frames) {
  return joint * frames + frame;
}

// Kronecker-style product of per-frame spatial and per-joint temporal weights
// into one [J*T x J*T] spatiotemporal matrix:
//   out(p*T + m, q*T + n) = s * t
// with (s, t) picked per the index convention (see autograd.hpp).
Tensor compose_spatiotemporal(const Tensor& a_s, const Tensor& a_t,
                              IndexConvention conv);

}  // namespace stgc
