#include "stgc/nn.hpp"

#include <algorithm>
#include <cmath>

#include "stgc/kernels.hpp"

namespace stgc {

Tensor linear_apply(const Tensor& x, const LinearMap& map) {
  return linear_apply(x, map.w, map.bias);
}

Tensor mlp_apply(const Tensor& x, const Mlp& net) {
  if (net.layers.empty()) throw ShapeError("mlp_apply needs at least one layer");
  if (net.slopes.size() + 1 != net.layers.size())
    throw ShapeError("mlp_apply needs one slope per hidden activation");
  Tensor h = linear_apply(x, net.layers.front());
  for (std::size_t i = 1; i < net.layers.size(); ++i) {
    h = prelu(h, net.slopes[i - 1]);
    h = linear_apply(h, net.layers[i]);
  }
  return h;
}

int ParamStore::add(std::string name, Tensor init, bool trainable) {
  if (index_.count(name)) throw ConfigError("duplicate parameter: " + name);
  Param p;
  p.name = std::move(name);
  p.value = std::move(init);
  p.trainable = trainable;
  params_.push_back(std::move(p));
  const int id = static_cast<int>(params_.size()) - 1;
  index_[params_.back().name] = id;
  return id;
}

Param& ParamStore::at(int id) { return params_.at(static_cast<std::size_t>(id)); }
const Param& ParamStore::at(int id) const {
  return params_.at(static_cast<std::size_t>(id));
}

int ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void ParamStore::zero_grads() {
  for (Param& p : params_)
    if (!p.grad.empty())
      std::fill(p.grad.values().begin(), p.grad.values().end(), 0.0);
}

std::size_t ParamStore::element_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const Param& p : params_)
    if (!trainable_only || p.trainable) n += p.value.size();
  return n;
}

std::vector<std::pair<std::string, std::size_t>> ParamStore::count_by_prefix()
    const {
  std::vector<std::pair<std::string, std::size_t>> out;
  for (const Param& p : params_) {
    if (!p.trainable) continue;
    const std::string prefix = p.name.substr(0, p.name.find('.'));
    if (out.empty() || out.back().first != prefix)
      out.emplace_back(prefix, 0u);
    out.back().second += p.value.size();
  }
  return out;
}

Var VarCache::operator[](int pid) {
  auto it = vars_.find(pid);
  if (it != vars_.end()) return it->second;
  Param& p = store_->at(pid);
  Var v = tape_->leaf(p.value, p.trainable);
  vars_.emplace(pid, v);
  return v;
}

void VarCache::accumulate_grads() {
  for (const auto& [pid, var] : vars_) {
    Param& p = store_->at(pid);
    if (!p.trainable) continue;
    const Tensor& g = tape_->grad(var);
    if (p.grad.empty()) p.grad = Tensor(p.value.shape());
    kernels::active().axpy(1.0, g.data(), p.grad.data(), g.size());
  }
}

std::vector<std::pair<int, Tensor>> VarCache::collect_grads() {
  std::vector<std::pair<int, Tensor>> out;
  out.reserve(vars_.size());
  for (const auto& [pid, var] : vars_) {
    if (!store_->at(pid).trainable) continue;
    out.emplace_back(pid, tape_->grad(var));
  }
  // map order is unstable; downstream reduction must not depend on it, but a
  // sorted list keeps debugging output readable
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

Var LinearMapP::apply(Tape& tape, VarCache& cache, Var x) const {
  return tape.linear(x, cache[w], b >= 0 ? cache[b] : Var{});
}

Var MlpP::apply(Tape& tape, VarCache& cache, Var x) const {
  Var h = x;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    h = maps[i].apply(tape, cache, h);
    if (i + 1 < maps.size()) h = tape.prelu(h, cache[slopes[i]]);
  }
  return h;
}

double glorot_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

LinearMapP make_linear(ParamStore& store, const std::string& name, int in,
                       int out, Rng& rng, bool bias, bool zero_init) {
  LinearMapP m;
  const double bound = glorot_bound(in, out);
  Tensor w = zero_init ? Tensor(std::vector<int>{in, out})
                       : random_uniform({in, out}, -bound, bound, rng);
  m.w = store.add(name + ".w", std::move(w));
  if (bias) m.b = store.add(name + ".b", Tensor(std::vector<int>{out}));
  return m;
}

MlpP make_mlp(ParamStore& store, const std::string& name,
              const std::vector<int>& widths, Rng& rng, bool zero_last) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least two widths");
  MlpP mlp;
  const std::size_t n = widths.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const bool zero = zero_last && i + 1 == n;
    mlp.maps.push_back(make_linear(store, name + ".l" + std::to_string(i),
                                   widths[i], widths[i + 1], rng, true, zero));
    if (i + 1 < n)
      mlp.slopes.push_back(store.add(name + ".s" + std::to_string(i),
                                     Tensor::scalar(0.25)));
  }
  return mlp;
}

GradCheckReport grad_check(ParamStore& store, const std::vector<int>& ids,
                           const std::function<double(bool)>& loss,
                           double step) {
  store.zero_grads();
  loss(true);
  std::vector<Tensor> analytic;
  analytic.reserve(ids.size());
  for (int id : ids) {
    Param& p = store.at(id);
    if (p.grad.empty()) p.grad = Tensor(p.value.shape());
    analytic.push_back(p.grad);
  }
  GradCheckReport report;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    Param& p = store.at(ids[k]);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      const double h = step * std::max(1.0, std::fabs(saved));
      p.value[i] = saved + h;
      const double up = loss(false);
      p.value[i] = saved - h;
      const double down = loss(false);
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double rel = std::fabs(analytic[k][i] - numeric) /
                         std::max(1.0, std::fabs(numeric));
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return report;
}

}  // namespace stgc
