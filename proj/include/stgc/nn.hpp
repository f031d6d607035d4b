#pragma once

// Named parameter storage plus the two reusable trainable building blocks
// (linear map, small MLP with per-layer PReLU) and a finite-difference
// gradient checker.

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "stgc/autograd.hpp"
#include "stgc/common.hpp"
#include "stgc/tensor.hpp"

namespace stgc {

// ------------------------------------------------------------- value types --

struct LinearMap {
  Tensor w;     // [C x C']
  Tensor bias;  // [C'] or empty
};

// linear, PReLU, ..., linear; one learnable slope per activation
struct Mlp {
  std::vector<LinearMap> layers;
  std::vector<double> slopes;
};

// x is [... x C]; leading extents preserved.
Tensor linear_apply(const Tensor& x, const LinearMap& map);
Tensor mlp_apply(const Tensor& x, const Mlp& net);

// ----------------------------------------------------------- trained store --

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;  // accumulated across samples; shaped lazily
  bool trainable = true;
  Tensor adam_m, adam_v;  // optimizer state, shaped lazily
};

class ParamStore {
 public:
  int add(std::string name, Tensor init, bool trainable = true);
  Param& at(int id);
  const Param& at(int id) const;
  int find(const std::string& name) const;  // -1 when absent
  int count() const { return static_cast<int>(params_.size()); }
  void zero_grads();
  std::size_t element_count(bool trainable_only = true) const;
  // Element counts grouped by the name prefix before the first '.'.
  std::vector<std::pair<std::string, std::size_t>> count_by_prefix() const;

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, int> index_;
};

// Instantiates store parameters as tape leaves on first use, so a parameter
// reused within one forward pass maps to a single leaf and its gradient
// contributions accumulate correctly.
class VarCache {
 public:
  VarCache(Tape& tape, ParamStore& store) : tape_(&tape), store_(&store) {}
  Var operator[](int pid);
  // store.grad += tape.grad for every parameter instantiated on this tape
  void accumulate_grads();
  // (param id, dL/dparam) for every trainable parameter this tape touched,
  // sorted by id; safe to call from the owning thread only
  std::vector<std::pair<int, Tensor>> collect_grads();

 private:
  Tape* tape_;
  ParamStore* store_;
  std::unordered_map<int, Var> vars_;
};

// ------------------------------------------------------------ layer descrs --

struct LinearMapP {
  int w = -1;
  int b = -1;  // -1 = no bias
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

// linear, PReLU, linear, PReLU, ..., linear (no activation after the last map)
struct MlpP {
  std::vector<LinearMapP> maps;
  std::vector<int> slopes;
  Var apply(Tape& tape, VarCache& cache, Var x) const;
};

// ------------------------------------------------------------------- init --

double glorot_bound(int fan_in, int fan_out);
LinearMapP make_linear(ParamStore& store, const std::string& name, int in,
                       int out, Rng& rng, bool bias = true,
                       bool zero_init = false);
MlpP make_mlp(ParamStore& store, const std::string& name,
              const std::vector<int>& widths, Rng& rng,
              bool zero_last = false);

// --------------------------------------------------------------- grad check --

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
};

// loss(true) must run forward+backward and leave gradients accumulated in the
// store; loss(false) must return the loss without touching gradients.
// Central differences with per-element step = step * max(1, |value|);
// relative error = |analytic - numeric| / max(1, |numeric|).
GradCheckReport grad_check(ParamStore& store, const std::vector<int>& ids,
                           const std::function<double(bool)>& loss,
                           double step = 1e-5);

}  // namespace stgc
