#pragma once

// Flat key=value run configuration shared by the command-line tools.
//
// Files hold one `key = value` per line; `#` starts a comment.  Keys are
// namespaced (model.*, train.*, data.*) and unknown keys are rejected.
// Later assignments win, so command-line --set overrides are applied after
// the file.  List values are whitespace- or comma-separated; chain lists
// separate chains with `|` (e.g. `0 1 2 3 | 4 5 6 7`).

#include <string>
#include <vector>

#include "stgc/train.hpp"

namespace stgc {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SyntheticSpec data;

  // dataset-level settings, also under the data.* prefix
  std::string manifest;  // when set, sequences come from MSEQ files
  int train_count = 200;
  int val_count = 0;
  int test_count = 50;
  std::vector<double> horizons_ms = {80, 160, 320, 400, 560, 1000};

  std::string skeleton_path;  // as resolved; empty = chain fallback
};

// One assignment; `base` is the directory relative paths resolve against
// (empty = current directory).  Throws ConfigError on unknown keys or
// unparseable values.
void apply_kv(RunConfig& cfg, const std::string& key, const std::string& value,
              const std::string& base = "");
void apply_file(RunConfig& cfg, const std::string& path);
// items are `key=value` strings as passed to --set
void apply_sets(RunConfig& cfg, const std::vector<std::string>& items);

// Fills derived pieces and validates: default swing chains when none are
// configured, a chain skeleton when the model needs one and none was given.
void finalize_run_config(RunConfig& cfg);

// Resolved configuration as re-parseable key=value text, fixed key order.
std::string dump_config(const RunConfig& cfg);

}  // namespace stgc
