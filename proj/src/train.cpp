#include "stgc/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "stgc/kernels.hpp"

namespace stgc {
namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct SampleGrad {
  double loss = 0.0;
  std::vector<std::pair<int, Tensor>> grads;
};

// forward + backward for one sample; returns loss and per-parameter grads
SampleGrad sample_pass(Model& m, const SequencePair& sample, int t0, int t1,
                       double seed) {
  Tape tape;
  VarCache cache(tape, m.store);
  const MotionSequence input = duplicate_last_pose(sample.observed, m.cfg.future);
  const MotionSequence truth = concat_frames(sample.observed, sample.future);
  Var out = model_forward(m, tape, cache, tape.leaf(input.values));
  Var loss = tape.mean_joint_distance(out, truth.values, t0, t1);
  SampleGrad r;
  r.loss = tape.value(loss)[0];
  if (std::isfinite(r.loss)) {
    tape.backward(loss, seed);
    r.grads = cache.collect_grads();
  }
  return r;
}

}  // namespace

LossSpan parse_loss_span(const std::string& s) {
  if (s == "full_sequence") return LossSpan::FullSequence;
  if (s == "future_only") return LossSpan::FutureOnly;
  throw ConfigError("unknown loss span `" + s +
                    "` (expected full_sequence or future_only)");
}

const char* to_string(LossSpan s) {
  return s == LossSpan::FullSequence ? "full_sequence" : "future_only";
}

void TrainConfig::validate() const {
  if (!(lr > 0) || !(decay > 0) || decay_every < 1 || batch < 1 || epochs < 0)
    throw ConfigError("training rates and sizes must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(eps > 0))
    throw ConfigError("bad optimizer constants");
  if (threads < 1) throw ConfigError("thread count must be >= 1");
}

double mpjpe(const MotionSequence& pred, const MotionSequence& truth, int t0,
             int t1) {
  if (!pred.values.same_shape(truth.values))
    throw ShapeError("mpjpe needs matching shapes, got " +
                     pred.values.shape_str() + " vs " + truth.values.shape_str());
  if (t0 < 0 || t1 > pred.frames() || t0 >= t1)
    throw ShapeError("bad mpjpe frame range");
  const int J = pred.joints(), D = pred.coords();
  double total = 0.0;
  for (int j = 0; j < J; ++j)
    for (int t = t0; t < t1; ++t) {
      double sq = 0.0;
      for (int d = 0; d < D; ++d) {
        const double e = pred.values(j, t, d) - truth.values(j, t, d);
        sq += e * e;
      }
      total += std::sqrt(sq);
    }
  return total / (static_cast<double>(J) * (t1 - t0));
}

MotionSequence zero_velocity(const MotionSequence& observed, int future) {
  const MotionSequence dup = duplicate_last_pose(observed, future);
  return slice_frames(dup, observed.frames(), observed.frames() + future);
}

std::vector<EpochStat> train(Model& m, const std::vector<SequencePair>& data,
                             const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw TrainError("training dataset is empty");
  const int K = m.cfg.past, L = m.cfg.future;
  for (const auto& s : data) {
    if (s.observed.frames() != K || s.future.frames() != L ||
        s.observed.joints() != m.cfg.joints)
      throw ShapeError("dataset sample does not match the model config");
  }
  const int t0 = cfg.span == LossSpan::FullSequence ? 0 : K;
  const int t1 = K + L;

  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(cfg.seed);
  std::vector<EpochStat> history;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const double lr = cfg.lr * std::pow(cfg.decay, epoch / cfg.decay_every);
    double epoch_loss = 0.0;

    for (std::size_t at = 0; at < order.size(); at += cfg.batch) {
      const std::size_t stop = std::min(order.size(), at + cfg.batch);
      const int bsize = static_cast<int>(stop - at);
      const double seed = 1.0 / bsize;
      std::vector<SampleGrad> results(static_cast<std::size_t>(bsize));

      if (cfg.threads <= 1) {
        for (int i = 0; i < bsize; ++i)
          results[static_cast<std::size_t>(i)] =
              sample_pass(m, data[static_cast<std::size_t>(order[at + i])], t0, t1, seed);
      } else {
        std::vector<std::thread> pool;
        const int workers = std::min(cfg.threads, bsize);
        for (int w = 0; w < workers; ++w)
          pool.emplace_back([&, w]() {
            for (int i = w; i < bsize; i += workers)
              results[static_cast<std::size_t>(i)] =
                  sample_pass(m, data[static_cast<std::size_t>(order[at + i])], t0, t1, seed);
          });
        for (auto& th : pool) th.join();
      }

      // reduce in sample order so grads do not depend on the thread count
      m.store.zero_grads();
      for (int i = 0; i < bsize; ++i) {
        SampleGrad& r = results[static_cast<std::size_t>(i)];
        if (!std::isfinite(r.loss))
          throw TrainError("non-finite loss at epoch " +
                           std::to_string(epoch + 1) + ", batch " +
                           std::to_string(at / cfg.batch + 1) + ", sample " +
                           std::to_string(order[at + i]));
        epoch_loss += r.loss;
        for (auto& [pid, g] : r.grads) {
          Param& p = m.store.at(pid);
          if (p.grad.empty()) p.grad = Tensor(p.value.shape());
          kernels::active().axpy(1.0, g.data(), p.grad.data(), g.size());
        }
      }

      // Adam step over the batch-mean gradient
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (int pid = 0; pid < m.store.count(); ++pid) {
        Param& p = m.store.at(pid);
        if (!p.trainable || p.grad.empty()) continue;
        if (p.adam_m.empty()) {
          p.adam_m = Tensor(p.value.shape());
          p.adam_v = Tensor(p.value.shape());
        }
        for (std::size_t k = 0; k < p.value.size(); ++k) {
          const double g = p.grad[k];
          p.adam_m[k] = cfg.beta1 * p.adam_m[k] + (1.0 - cfg.beta1) * g;
          p.adam_v[k] = cfg.beta2 * p.adam_v[k] + (1.0 - cfg.beta2) * g * g;
          const double mhat = p.adam_m[k] / c1;
          const double vhat = p.adam_v[k] / c2;
          p.value[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
      }
    }

    history.push_back(
        {epoch + 1, epoch_loss / static_cast<double>(data.size()), lr});
  }
  return history;
}

namespace {

void eval_accumulate(const MotionSequence& pred_future,
                     const MotionSequence& truth_future,
                     const std::vector<int>& frames, std::vector<double>& sums) {
  for (std::size_t h = 0; h < frames.size(); ++h) {
    const int f = frames[h] - 1;  // 1-based horizon frame into the future
    sums[h] += mpjpe(pred_future, truth_future, f, f + 1);
  }
}

std::vector<int> horizon_frames(const std::vector<double>& horizons_ms,
                                double fps, int future) {
  std::vector<int> frames;
  for (double ms : horizons_ms) {
    const int f = ms_to_frame(ms, fps);
    if (f > future)
      throw ConfigError("horizon " + fmt17(ms) + " ms maps to frame " +
                        std::to_string(f) + " beyond the " +
                        std::to_string(future) + "-frame future window");
    frames.push_back(f);
  }
  return frames;
}

EvalReport finish_report(const std::vector<double>& horizons_ms,
                         const std::vector<double>& sums, std::size_t count,
                         double seconds) {
  EvalReport rep;
  double total = 0.0;
  for (std::size_t h = 0; h < horizons_ms.size(); ++h) {
    const double v = sums[h] / static_cast<double>(count);
    rep.horizons.emplace_back(horizons_ms[h], v);
    total += v;
  }
  rep.average = horizons_ms.empty() ? 0.0 : total / static_cast<double>(horizons_ms.size());
  rep.mean_forward_seconds = seconds / static_cast<double>(count);
  return rep;
}

}  // namespace

EvalReport evaluate(Model& m, const std::vector<SequencePair>& data,
                    const std::vector<double>& horizons_ms) {
  if (data.empty()) throw ConfigError("evaluation dataset is empty");
  const double fps = data.front().observed.fps;
  const std::vector<int> frames = horizon_frames(horizons_ms, fps, m.cfg.future);
  std::vector<double> sums(horizons_ms.size(), 0.0);
  double seconds = 0.0;
  for (const auto& sample : data) {
    const double tic = now_seconds();
    const MotionSequence pred = forward_model(m, sample.observed);
    seconds += now_seconds() - tic;
    const MotionSequence pred_future =
        slice_frames(pred, m.cfg.past, m.cfg.past + m.cfg.future);
    eval_accumulate(pred_future, sample.future, frames, sums);
  }
  return finish_report(horizons_ms, sums, data.size(), seconds);
}

EvalReport evaluate_zero_velocity(const std::vector<SequencePair>& data,
                                  int future,
                                  const std::vector<double>& horizons_ms) {
  if (data.empty()) throw ConfigError("evaluation dataset is empty");
  const double fps = data.front().observed.fps;
  const std::vector<int> frames = horizon_frames(horizons_ms, fps, future);
  std::vector<double> sums(horizons_ms.size(), 0.0);
  for (const auto& sample : data)
    eval_accumulate(zero_velocity(sample.observed, future), sample.future,
                    frames, sums);
  return finish_report(horizons_ms, sums, data.size(), 0.0);
}

std::string eval_table(const EvalReport& report) {
  std::ostringstream out;
  char buf[64];
  out << "horizon_ms      mpjpe\n";
  for (const auto& [ms, v] : report.horizons) {
    std::snprintf(buf, sizeof buf, "%10.0f %10.4f\n", ms, v);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "%10s %10.4f\n", "average", report.average);
  out << buf;
  if (report.mean_forward_seconds > 0) {
    std::snprintf(buf, sizeof buf, "forward: %.6f s/sequence\n",
                  report.mean_forward_seconds);
    out << buf;
  }
  return out.str();
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "horizon_ms,mpjpe\n";
  for (const auto& [ms, v] : report.horizons)
    out << fmt17(ms) << ',' << fmt17(v) << '\n';
  out << "average," << fmt17(report.average) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

void write_loss_csv(const std::vector<EpochStat>& history,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "epoch,loss,lr\n";
  for (const auto& e : history)
    out << e.epoch << ',' << fmt17(e.loss) << ',' << fmt17(e.lr) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace stgc
