#include "stgc/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stgc/analysis.hpp"
#include "stgc/config.hpp"
#include "stgc/graphs.hpp"

namespace stgc {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::string config;
  std::vector<std::string> sets;
  std::string out = "out";
  long long seed = -1;  // < 0: keep per-section seeds
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key=value config file");
  sub->add_option("--set", c.sets, "config override, key=value (repeatable)")
      ->type_size(1);
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed,
                  "master seed; overrides model/train/data seeds");
}

RunConfig assemble(const Common& c) {
  RunConfig cfg;
  if (!c.config.empty()) apply_file(cfg, c.config);
  apply_sets(cfg, c.sets);
  if (c.seed >= 0) {
    const auto s = static_cast<unsigned long long>(c.seed);
    cfg.model.seed = s;
    cfg.train.seed = s;
    cfg.data.seed = s;
  }
  finalize_run_config(cfg);
  return cfg;
}

int env_threads(int requested) {
  if (const char* env = std::getenv("STGC_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) return std::min(requested, cap);
    } catch (...) {
      throw ConfigError(std::string("STGC_THREADS is not a number: ") + env);
    }
  }
  return requested;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

// prints the resolved config and mirrors it next to the outputs
void log_config(const RunConfig& cfg, const std::string& out_dir) {
  const std::string text = dump_config(cfg);
  std::cout << "resolved config:\n" << text << '\n';
  if (!out_dir.empty()) write_text(out_dir + "/config.txt", text);
}

std::vector<SequencePair> pairs_from_files(const std::vector<std::string>& files,
                                           int past, int future) {
  std::vector<SequencePair> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    MotionSequence seq = read_mseq_file(f);
    if (seq.frames() < past + future)
      throw ShapeError(f + ": " + std::to_string(seq.frames()) +
                       " frames but the split needs " +
                       std::to_string(past + future));
    out.push_back({slice_frames(seq, 0, past),
                   slice_frames(seq, past, past + future)});
  }
  return out;
}

// which: 0 train, 1 val, 2 test; synthetic splits get offset seeds
std::vector<SequencePair> load_split(const RunConfig& cfg, int which) {
  if (!cfg.manifest.empty()) {
    const Manifest mf = read_manifest(cfg.manifest);
    const auto& files = which == 0 ? mf.train : which == 1 ? mf.val : mf.test;
    return pairs_from_files(files, cfg.data.past, cfg.data.future);
  }
  SyntheticSpec sp = cfg.data;
  sp.seed += static_cast<unsigned long long>(which);
  const int count = which == 0   ? cfg.train_count
                    : which == 1 ? cfg.val_count
                                 : cfg.test_count;
  return synth_dataset(sp, count);
}

// ------------------------------------------------------------------- synth --

int cmd_synth(const Common& c) {
  RunConfig cfg = assemble(c);
  fs::create_directories(c.out);
  log_config(cfg, c.out);
  Manifest mf;
  const char* prefix[] = {"train", "val", "test"};
  const int counts[] = {cfg.train_count, cfg.val_count, cfg.test_count};
  for (int which = 0; which < 3; ++which) {
    SyntheticSpec sp = cfg.data;
    sp.seed += static_cast<unsigned long long>(which);
    const auto pairs = synth_dataset(sp, counts[which]);
    auto& list = which == 0 ? mf.train : which == 1 ? mf.val : mf.test;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "%s_%04zu.mseq", prefix[which], i);
      write_mseq_file(concat_frames(pairs[i].observed, pairs[i].future),
                      c.out + "/" + name);
      list.emplace_back(name);
    }
  }
  write_manifest(mf, c.out + "/manifest.txt");
  std::printf("wrote %d train / %d val / %d test sequences to %s\n",
              cfg.train_count, cfg.val_count, cfg.test_count, c.out.c_str());
  return 0;
}

// ------------------------------------------------------------------- train --

int cmd_train(const Common& c) {
  RunConfig cfg = assemble(c);
  cfg.train.threads = env_threads(cfg.train.threads);
  const auto data = load_split(cfg, 0);
  fs::create_directories(c.out);
  log_config(cfg, c.out);
  Model m = build_model(cfg.model);
  std::printf("training %s/%s on %zu sequences, %zu parameters\n",
              to_string(m.cfg.arch), to_string(m.cfg.kind), data.size(),
              count_params(m));
  const auto history = train(m, data, cfg.train);
  for (const auto& e : history)
    std::printf("epoch %3d/%d  loss %.6f  lr %.6g\n", e.epoch, cfg.train.epochs,
                e.loss, e.lr);
  write_loss_csv(history, c.out + "/loss.csv");
  save_checkpoint(m, c.out + "/model.ckpt");
  std::printf("wrote %s/loss.csv and %s/model.ckpt\n", c.out.c_str(),
              c.out.c_str());
  return 0;
}

// -------------------------------------------------------------------- eval --

int cmd_eval(const Common& c, const std::string& checkpoint, bool baseline) {
  RunConfig cfg = assemble(c);
  const auto test = load_split(cfg, 2);
  fs::create_directories(c.out);
  log_config(cfg, c.out);
  EvalReport rep;
  if (baseline) {
    std::printf("zero-velocity baseline on %zu sequences\n", test.size());
    rep = evaluate_zero_velocity(test, cfg.data.future, cfg.horizons_ms);
  } else {
    Model m = checkpoint.empty() ? build_model(cfg.model)
                                 : load_checkpoint(checkpoint);
    std::printf("evaluating %s on %zu sequences\n",
                checkpoint.empty() ? "freshly built model" : checkpoint.c_str(),
                test.size());
    rep = evaluate(m, test, cfg.horizons_ms);
  }
  std::cout << eval_table(rep);
  write_eval_csv(rep, c.out + "/eval.csv");
  std::printf("wrote %s/eval.csv\n", c.out.c_str());
  return 0;
}

// ------------------------------------------------------------------ verify --

bool constraint_pattern_ok(const ConstraintReport& r) {
  using CS = ConstraintStatus;
  const auto s = [&](int i) { return r.constraint[i].status; };
  switch (r.kind) {
    case GcKind::St:
      return s(0) == CS::NotApplicable && s(1) == CS::NotApplicable &&
             s(2) == CS::NotApplicable;
    case GcKind::Vstd:
      return s(0) == CS::Holds && s(1) == CS::Holds && s(2) == CS::Holds;
    case GcKind::S:
    case GcKind::T:
    case GcKind::Std:
    case GcKind::Tsd:
    case GcKind::Sts:
      return s(0) == CS::Holds && s(1) == CS::Violated && s(2) == CS::Holds;
    default:
      return s(0) == CS::Holds && s(1) == CS::Violated && s(2) == CS::Violated;
  }
}

int cmd_verify(long long seed_in) {
  const auto seed =
      seed_in >= 0 ? static_cast<unsigned long long>(seed_in) : 1ull;
  bool all_ok = true;
  const auto gate = [&](bool ok, const std::string& what) {
    std::printf("[%s] %s\n", ok ? " ok " : "FAIL", what.c_str());
    all_ok = all_ok && ok;
  };
  char line[160];

  {
    double worst = 0.0;
    Rng pick(seed * 1000 + 7);
    for (int i = 0; i < 20; ++i) {
      const int J = 2 + static_cast<int>(pick() % 7);
      const int T = 2 + static_cast<int>(pick() % 7);
      const int C = 2 + static_cast<int>(pick() % 4);
      worst = std::max(worst, verify_factorization(seed + 31 * i, J, T, C));
    }
    std::snprintf(line, sizeof line,
                  "factorization: dynamic pair == composed flat, 20 instances, "
                  "max dev %.3g",
                  worst);
    gate(worst <= 1e-10, line);
  }
  {
    double worst_sf = 0.0, worst_ojt = 0.0, min_of = 1e300;
    for (int i = 0; i < 20; ++i) {
      const EquivalenceReport r =
          verify_std_sts_equivalence(seed + 11 * i, 4 + i % 3, 5 + i % 4, 6);
      worst_sf = std::max(worst_sf, r.source_frame);
      worst_ojt = std::max(worst_ojt, r.output_joint_temporal);
      min_of = std::min(min_of, r.output_frame);
    }
    std::snprintf(line, sizeof line,
                  "stacking == factored under matching conventions, max dev "
                  "%.3g / %.3g",
                  worst_sf, worst_ojt);
    gate(worst_sf <= 1e-11 && worst_ojt <= 1e-11, line);
    std::snprintf(line, sizeof line,
                  "output-frame convention differs on generic data, min dev "
                  "%.3g",
                  min_of);
    gate(min_of > 1e-6, line);
  }
  {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i)
      worst = std::max(worst, verify_alpha_zero_static(seed + 7 * i, 5, 6, 8, 4));
    std::snprintf(line, sizeof line,
                  "zero blend reduces the dynamic pair to its static layer, "
                  "max dev %.3g",
                  worst);
    gate(worst <= 1e-12, line);
  }
  {
    const GcKind kinds[] = {GcKind::St,  GcKind::S,   GcKind::T,  GcKind::Std,
                            GcKind::Tsd, GcKind::Vstd, GcKind::Sts, GcKind::Ds,
                            GcKind::Dt,  GcKind::Dstd, GcKind::Dtsd};
    for (GcKind k : kinds) {
      const ConstraintReport r =
          check_constraints(k, seed + 5, 4, 5, 6, 3, /*samples=*/3, /*alpha=*/0.8);
      std::cout << constraint_table(r);
      std::snprintf(line, sizeof line, "constraint pattern for %s",
                    to_string(k));
      gate(constraint_pattern_ok(r), line);
    }
  }
  {
    const GcKind kinds[] = {GcKind::S,   GcKind::T,  GcKind::Std, GcKind::Tsd,
                            GcKind::Vstd, GcKind::Sts, GcKind::St, GcKind::Ds,
                            GcKind::Dt,  GcKind::Dstd};
    double worst = 0.0;
    std::string worst_at;
    for (GcKind k : kinds) {
      const GradCheckReport r = layer_grad_check(k, seed + 13, 3, 4, 4, 2);
      if (r.max_rel_err > worst) {
        worst = r.max_rel_err;
        worst_at = std::string(to_string(k)) + ":" + r.worst_param;
      }
    }
    std::snprintf(line, sizeof line,
                  "finite-difference gradients, 10 kinds, worst rel err %.3g "
                  "(%s)",
                  worst, worst_at.c_str());
    gate(worst < 1e-4, line);
  }
  std::printf("verify: %s\n", all_ok ? "all suites passed" : "FAILURES above");
  return all_ok ? 0 : 1;
}

// ------------------------------------------------------------------ params --

int cmd_params(const std::string& kind, int J, int T, int C, int r, int units,
               int coords, const std::string& arch, const std::string& variant) {
  ModelConfig mc;
  mc.arch = parse_arch(arch);
  mc.kind = parse_gc_kind(kind);
  mc.variant = parse_variant(variant);
  mc.joints = J;
  mc.coords = coords;
  mc.channels = C;
  mc.reduction = r;
  mc.past = 1;
  mc.future = T - 1;
  mc.units_per_block = 1;
  mc.blocks = units - 2;
  if (mc.needs_skeleton()) mc.skeleton = chain_skeleton(J);
  mc.validate();
  Model m = build_model(mc);
  std::printf("%s/%s, J=%d T=%d C=%d r=%d, %d units\n", to_string(mc.arch),
              to_string(mc.kind), J, T, C, r, units);
  for (const auto& [name, count] : param_breakdown(m))
    std::printf("  %-12s %10zu\n", name.c_str(), count);
  const std::size_t total = count_params(m);
  std::printf("total %zu (~%.2fM)\n", total, static_cast<double>(total) / 1e6);
  if (mc.arch == ModelArch::Full && mc.variant == ModelVariant::Full)
    std::printf("closed-form total %zu\n", model_param_formula(mc));
  return 0;
}

// ------------------------------------------------------------------- bench --

int cmd_bench(const Common& c, std::vector<int> sizes, int channels,
              int reduction, int reps) {
  if (reduction <= 0) reduction = channels;
  std::printf("bench.sizes =");
  for (int t : sizes) std::printf(" %d", t);
  std::printf("\nbench.channels = %d\nbench.reduction = %d\nbench.reps = %d\n",
              channels, reduction, reps);
  const ScalingReport rep = bench_scaling(sizes, channels, reduction, reps);
  std::cout << scaling_table(rep);
  fs::create_directories(c.out);
  write_scaling_csvs(rep, c.out);
  std::printf("wrote %s/bench_sts.csv and %s/bench_dstd.csv\n", c.out.c_str(),
              c.out.c_str());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"spatiotemporal graph convolutions for motion prediction"};
  app.require_subcommand(1);

  Common c_synth, c_train, c_eval, c_bench;
  auto* synth = app.add_subcommand("synth", "write a synthetic MSEQ dataset");
  add_common(synth, c_synth);
  auto* train = app.add_subcommand("train", "train a model, write checkpoint");
  add_common(train, c_train);
  auto* eval = app.add_subcommand("eval", "horizon-wise test error");
  add_common(eval, c_eval);
  std::string checkpoint;
  bool baseline = false;
  eval->add_option("--checkpoint", checkpoint, "trained model to load");
  eval->add_flag("--baseline", baseline, "evaluate the zero-velocity baseline");

  auto* verify = app.add_subcommand("verify", "run the verification suites");
  long long verify_seed = 1;
  verify->add_option("--seed", verify_seed, "base seed for the suites");

  auto* params = app.add_subcommand("params", "parameter accounting");
  std::string p_kind = "dstd", p_arch = "compare", p_variant = "full";
  int p_J = 25, p_T = 35, p_C = 64, p_r = 32, p_units = 7, p_coords = 3;
  params->add_option("--kind", p_kind, "layer kind");
  params->add_option("--J", p_J, "joints");
  params->add_option("--T", p_T, "frames");
  params->add_option("--C", p_C, "feature channels");
  params->add_option("--r", p_r, "reduction rate");
  params->add_option("--units", p_units, "total units incl. encode/decode");
  params->add_option("--coords", p_coords, "input coordinates per joint");
  params->add_option("--arch", p_arch, "compare|full");
  params->add_option("--variant", p_variant, "full-model variant");

  auto* bench = app.add_subcommand("bench", "forward-time scaling in T");
  std::vector<int> b_sizes = {16, 24, 32, 48, 64};
  int b_channels = 64, b_reduction = 0, b_reps = 11;
  add_common(bench, c_bench);
  bench->add_option("--sizes", b_sizes, "sequence lengths")->type_size(1);
  bench->add_option("--channels", b_channels, "feature channels");
  bench->add_option("--reduction", b_reduction, "reduction rate (0 = channels)");
  bench->add_option("--reps", b_reps, "timing repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (synth->parsed()) return cmd_synth(c_synth);
    if (train->parsed()) return cmd_train(c_train);
    if (eval->parsed()) return cmd_eval(c_eval, checkpoint, baseline);
    if (verify->parsed()) return cmd_verify(verify_seed);
    if (params->parsed())
      return cmd_params(p_kind, p_J, p_T, p_C, p_r, p_units, p_coords, p_arch,
                        p_variant);
    if (bench->parsed())
      return cmd_bench(c_bench, b_sizes, b_channels, b_reduction, b_reps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace stgc
