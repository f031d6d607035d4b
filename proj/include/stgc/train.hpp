#pragma once

// MPJPE loss and metric, zero-velocity baseline, Adam training loop with a
// stepped learning-rate schedule, and horizon-wise evaluation tables.

#include "stgc/model.hpp"

namespace stgc {

enum class LossSpan { FullSequence, FutureOnly };

LossSpan parse_loss_span(const std::string& s);
const char* to_string(LossSpan s);

struct TrainConfig {
  double lr = 3e-3;
  double decay = 0.9;
  int decay_every = 5;  // epochs
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int batch = 32;
  int epochs = 50;
  unsigned long long seed = 1;
  LossSpan span = LossSpan::FullSequence;
  int threads = 1;

  void validate() const;
};

struct EpochStat {
  int epoch = 0;  // 1-based
  double loss = 0.0;
  double lr = 0.0;
};

// Mean over joints and frames [t0, t1) of the Euclidean per-joint error.
double mpjpe(const MotionSequence& pred, const MotionSequence& truth, int t0,
             int t1);

// Last observed pose repeated over the future window (future frames only).
MotionSequence zero_velocity(const MotionSequence& observed, int future);

// Per-sample forward/backward with batched Adam updates; batches are drawn by
// seeded shuffling and gradients reduce in fixed sample order, so a seed pins
// the whole run (including across thread counts).  Non-finite losses abort.
std::vector<EpochStat> train(Model& m, const std::vector<SequencePair>& data,
                             const TrainConfig& cfg);

struct EvalReport {
  std::vector<std::pair<double, double>> horizons;  // (ms, mpjpe at frame)
  double average = 0.0;
  double mean_forward_seconds = 0.0;
};

// MPJPE at each horizon's mapped future frame, averaged over the dataset.
EvalReport evaluate(Model& m, const std::vector<SequencePair>& data,
                    const std::vector<double>& horizons_ms);
// Same table for the zero-velocity baseline.
EvalReport evaluate_zero_velocity(const std::vector<SequencePair>& data,
                                  int future, const std::vector<double>& horizons_ms);

// deterministic text forms: timing is reported only in the human table so the
// CSV is byte-stable across runs
std::string eval_table(const EvalReport& report);
void write_eval_csv(const EvalReport& report, const std::string& path);
void write_loss_csv(const std::vector<EpochStat>& history,
                    const std::string& path);

}  // namespace stgc
