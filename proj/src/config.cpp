#include "stgc/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stgc/graphs.hpp"

namespace stgc {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("bad value for " + key + ": '" + value + "'");
}

int to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, value);
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, value);
  }
}

unsigned long long to_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    bad_value(key, value);
  }
}

std::vector<std::string> tokens(const std::string& value) {
  std::string s = value;
  for (char& c : s)
    if (c == ',') c = ' ';
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const auto& t : tokens(value)) out.push_back(to_double(key, t));
  return out;
}

std::vector<std::vector<int>> to_chains(const std::string& key,
                                        const std::string& value) {
  std::vector<std::vector<int>> out;
  std::string part;
  std::istringstream in(value);
  while (std::getline(in, part, '|')) {
    std::vector<int> chain;
    for (const auto& t : tokens(part)) chain.push_back(to_int(key, t));
    if (!chain.empty()) out.push_back(std::move(chain));
  }
  return out;
}

std::string dir_of(const std::string& path) {
  const std::size_t cut = path.find_last_of('/');
  return cut == std::string::npos ? "" : path.substr(0, cut);
}

std::string join_path(const std::string& base, const std::string& rel) {
  if (base.empty() || (!rel.empty() && rel.front() == '/')) return rel;
  return base + "/" + rel;
}

std::string fmtd(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmtd(v[i]);
  }
  return out;
}

std::string join_chains(const std::vector<std::vector<int>>& chains) {
  std::string out;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    if (c) out += " | ";
    for (std::size_t i = 0; i < chains[c].size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(chains[c][i]);
    }
  }
  return out;
}

}  // namespace

void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value,
              const std::string& base) {
  ModelConfig& m = cfg.model;
  TrainConfig& t = cfg.train;
  SyntheticSpec& d = cfg.data;

  if (key == "model.joints") m.joints = to_int(key, value);
  else if (key == "model.past") m.past = to_int(key, value);
  else if (key == "model.future") m.future = to_int(key, value);
  else if (key == "model.coords") m.coords = to_int(key, value);
  else if (key == "model.channels") m.channels = to_int(key, value);
  else if (key == "model.reduction") m.reduction = to_int(key, value);
  else if (key == "model.blocks") m.blocks = to_int(key, value);
  else if (key == "model.units_per_block") m.units_per_block = to_int(key, value);
  else if (key == "model.arch") m.arch = parse_arch(value);
  else if (key == "model.kind") m.kind = parse_gc_kind(value);
  else if (key == "model.variant") m.variant = parse_variant(value);
  else if (key == "model.convention") m.convention = parse_convention(value);
  else if (key == "model.seed") m.seed = to_seed(key, value);
  else if (key == "model.skeleton") {
    cfg.skeleton_path = join_path(base, value);
    m.skeleton = read_skeleton_file(cfg.skeleton_path);
  } else if (key == "train.lr") t.lr = to_double(key, value);
  else if (key == "train.decay") t.decay = to_double(key, value);
  else if (key == "train.decay_every") t.decay_every = to_int(key, value);
  else if (key == "train.beta1") t.beta1 = to_double(key, value);
  else if (key == "train.beta2") t.beta2 = to_double(key, value);
  else if (key == "train.eps") t.eps = to_double(key, value);
  else if (key == "train.batch") t.batch = to_int(key, value);
  else if (key == "train.epochs") t.epochs = to_int(key, value);
  else if (key == "train.seed") t.seed = to_seed(key, value);
  else if (key == "train.span") t.span = parse_loss_span(value);
  else if (key == "train.threads") t.threads = to_int(key, value);
  else if (key == "data.joints") d.joints = to_int(key, value);
  else if (key == "data.past") d.past = to_int(key, value);
  else if (key == "data.future") d.future = to_int(key, value);
  else if (key == "data.fps") d.fps = to_double(key, value);
  else if (key == "data.chains") d.chains = to_chains(key, value);
  else if (key == "data.frequencies") d.frequencies = to_doubles(key, value);
  else if (key == "data.amplitudes") d.amplitudes = to_doubles(key, value);
  else if (key == "data.lag") d.lag = to_double(key, value);
  else if (key == "data.freq_jitter") d.freq_jitter = to_double(key, value);
  else if (key == "data.base_range") d.base_range = to_double(key, value);
  else if (key == "data.noise") d.noise = to_double(key, value);
  else if (key == "data.seed") d.seed = to_seed(key, value);
  else if (key == "data.manifest") cfg.manifest = join_path(base, value);
  else if (key == "data.train_count") cfg.train_count = to_int(key, value);
  else if (key == "data.val_count") cfg.val_count = to_int(key, value);
  else if (key == "data.test_count") cfg.test_count = to_int(key, value);
  else if (key == "data.horizons_ms") cfg.horizons_ms = to_doubles(key, value);
  else throw ConfigError("unknown config key: " + key);
}

void apply_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  const std::string base = dir_of(path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    apply_kv(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base);
  }
}

void apply_sets(RunConfig& cfg, const std::vector<std::string>& items) {
  for (const auto& item : items) {
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + item + "'");
    apply_kv(cfg, trim(item.substr(0, eq)), trim(item.substr(eq + 1)), "");
  }
}

void finalize_run_config(RunConfig& cfg) {
  SyntheticSpec& d = cfg.data;
  if (d.chains.empty()) {
    // default swing layout: consecutive chains of four joints, cycling base
    // frequencies so neighbouring chains move differently
    static const double freqs[] = {0.6, 0.9, 1.2, 0.75, 1.05};
    for (int j = 0; j < d.joints; j += 4) {
      std::vector<int> chain;
      for (int i = j; i < std::min(j + 4, d.joints); ++i) chain.push_back(i);
      d.frequencies.push_back(freqs[(j / 4) % 5]);
      d.amplitudes.push_back(1.0);
      d.chains.push_back(std::move(chain));
    }
  }
  d.validate();
  if (cfg.model.needs_skeleton() && cfg.model.skeleton.joints == 0)
    cfg.model.skeleton = chain_skeleton(cfg.model.joints);
  cfg.model.validate();
  cfg.train.validate();
  if (cfg.train_count < 0 || cfg.val_count < 0 || cfg.test_count < 0)
    throw ConfigError("dataset counts must be >= 0");
  if (cfg.horizons_ms.empty()) throw ConfigError("data.horizons_ms is empty");
  for (double h : cfg.horizons_ms)
    if (!(h > 0)) throw ConfigError("horizons must be positive milliseconds");
}

std::string dump_config(const RunConfig& cfg) {
  const ModelConfig& m = cfg.model;
  const TrainConfig& t = cfg.train;
  const SyntheticSpec& d = cfg.data;
  std::ostringstream out;
  out << "model.joints = " << m.joints << '\n'
      << "model.past = " << m.past << '\n'
      << "model.future = " << m.future << '\n'
      << "model.coords = " << m.coords << '\n'
      << "model.channels = " << m.channels << '\n'
      << "model.reduction = " << m.reduction << '\n'
      << "model.blocks = " << m.blocks << '\n'
      << "model.units_per_block = " << m.units_per_block << '\n'
      << "model.arch = " << to_string(m.arch) << '\n'
      << "model.kind = " << to_string(m.kind) << '\n'
      << "model.variant = " << to_string(m.variant) << '\n'
      << "model.convention = " << to_string(m.convention) << '\n'
      << "model.seed = " << m.seed << '\n';
  if (!cfg.skeleton_path.empty())
    out << "model.skeleton = " << cfg.skeleton_path << '\n';
  out << "train.lr = " << fmtd(t.lr) << '\n'
      << "train.decay = " << fmtd(t.decay) << '\n'
      << "train.decay_every = " << t.decay_every << '\n'
      << "train.beta1 = " << fmtd(t.beta1) << '\n'
      << "train.beta2 = " << fmtd(t.beta2) << '\n'
      << "train.eps = " << fmtd(t.eps) << '\n'
      << "train.batch = " << t.batch << '\n'
      << "train.epochs = " << t.epochs << '\n'
      << "train.seed = " << t.seed << '\n'
      << "train.span = " << to_string(t.span) << '\n'
      << "train.threads = " << t.threads << '\n'
      << "data.joints = " << d.joints << '\n'
      << "data.past = " << d.past << '\n'
      << "data.future = " << d.future << '\n'
      << "data.fps = " << fmtd(d.fps) << '\n'
      << "data.chains = " << join_chains(d.chains) << '\n'
      << "data.frequencies = " << join_doubles(d.frequencies) << '\n'
      << "data.amplitudes = " << join_doubles(d.amplitudes) << '\n'
      << "data.lag = " << fmtd(d.lag) << '\n'
      << "data.freq_jitter = " << fmtd(d.freq_jitter) << '\n'
      << "data.base_range = " << fmtd(d.base_range) << '\n'
      << "data.noise = " << fmtd(d.noise) << '\n'
      << "data.seed = " << d.seed << '\n';
  if (!cfg.manifest.empty()) out << "data.manifest = " << cfg.manifest << '\n';
  out << "data.train_count = " << cfg.train_count << '\n'
      << "data.val_count = " << cfg.val_count << '\n'
      << "data.test_count = " << cfg.test_count << '\n'
      << "data.horizons_ms = " << join_doubles(cfg.horizons_ms) << '\n';
  return out.str();
}

}  // namespace stgc
