#include "accident/training/losses.hpp"

#include <algorithm>
#include <cmath>

#include "accident/errors.hpp"

namespace accident::training {

namespace {

double neg_log(double x) { return -std::log(std::max(x, kLogFloor)); }
double neg_log_grad(double x) { return x > kLogFloor ? -1.0 / x : 0.0; }

std::vector<double> frame_weights(std::size_t frames, const ClipTarget& target, double lambda) {
  std::vector<double> w(frames, 1.0);
  if (target.label == Label::positive) {
    if (!target.accident_frame) throw ValidationError("accident_frame", "positive clip without accident frame");
    for (std::size_t t = 0; t < frames; ++t) w[t] = score_weight(static_cast<int>(t + 1), *target.accident_frame, lambda);
  }
  return w;
}

}  // namespace

void LossConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(eta >= 0.0)) throw ConfigError("eta must be non-negative");
  if (phase != 1 && phase != 2) throw ConfigError("phase must be 1 or 2");
}

double score_weight(int t, int tau, double lambda) {
  return std::exp(-std::max(static_cast<double>(tau - t) / lambda, 0.0));
}

ad::Var score_loss(ad::Var s, const ClipTarget& target, double lambda) {
  const Matrix& v = s.value();
  const std::size_t frames = v.size();
  if (frames == 0) throw ShapeError("score loss: empty trace");
  const std::vector<double> w = frame_weights(frames, target, lambda);
  const bool pos = target.label == Label::positive;
  double total = 0.0;
  for (std::size_t t = 0; t < frames; ++t) total += w[t] * neg_log(pos ? v[t] : 1.0 - v[t]);
  const double inv_t = 1.0 / static_cast<double>(frames);
  return s.tape()->push(Matrix(1, 1, total * inv_t), {s}, [s, w, pos, inv_t](ad::Tape& tape, int self) {
    const double g = tape.grad(self)[0] * inv_t;
    const Matrix& x = tape.value(s);
    Matrix& gs = tape.grad(s);
    for (std::size_t t = 0; t < x.size(); ++t) {
      gs[t] += pos ? g * w[t] * neg_log_grad(x[t]) : -g * w[t] * neg_log_grad(1.0 - x[t]);
    }
  });
}

double score_loss(const std::vector<heads::ScoreTrace>& traces, const std::vector<ClipTarget>& targets,
                  const LossConfig& cfg) {
  if (traces.size() != targets.size()) throw ShapeError("score loss: batch size mismatch");
  if (traces.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    ad::Tape tape(false);
    const auto& s = traces[i].s;
    sum += score_loss(tape.constant(Matrix(s.size(), 1, s)), targets[i], cfg.lambda).scalar();
  }
  return sum / static_cast<double>(traces.size());
}

ad::Var anticipation_loss(ad::Var l_a, Label label) {
  const double p = l_a.scalar();
  const bool pos = label == Label::positive;
  const double value = pos ? neg_log(p) : neg_log(1.0 - p);
  return l_a.tape()->push(Matrix(1, 1, value), {l_a}, [l_a, pos](ad::Tape& tape, int self) {
    const double g = tape.grad(self)[0];
    const double x = tape.value(l_a)[0];
    tape.grad(l_a)[0] += pos ? g * neg_log_grad(x) : -g * neg_log_grad(1.0 - x);
  });
}

double anticipation_loss(std::span<const double> l_a, std::span<const std::uint8_t> labels) {
  if (l_a.size() != labels.size()) throw ShapeError("anticipation loss: batch size mismatch");
  if (l_a.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < l_a.size(); ++i) sum += labels[i] != 0 ? neg_log(l_a[i]) : neg_log(1.0 - l_a[i]);
  return sum / static_cast<double>(l_a.size());
}

std::optional<ad::Var> localization_loss(ad::Var scores, std::size_t n_objects,
                                         const std::vector<std::uint8_t>& involvement,
                                         const std::vector<std::uint8_t>& mask) {
  const Matrix& v = scores.value();
  if (n_objects == 0 || v.size() != mask.size() || involvement.size() != mask.size() || v.size() % n_objects != 0) {
    throw ShapeError("localization loss: shape mismatch");
  }
  const std::size_t frames = v.size() / n_objects;
  // Per-slot weight folding both averages: 1 / (frames with a slot * slots at t).
  std::vector<double> w(v.size(), 0.0);
  std::size_t active_frames = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t occ = 0;
    for (std::size_t n = 0; n < n_objects; ++n) occ += mask[t * n_objects + n] != 0;
    if (occ == 0) continue;
    ++active_frames;
    for (std::size_t n = 0; n < n_objects; ++n) {
      if (mask[t * n_objects + n] != 0) w[t * n_objects + n] = 1.0 / static_cast<double>(occ);
    }
  }
  if (active_frames == 0) return std::nullopt;
  const double inv_f = 1.0 / static_cast<double>(active_frames);
  for (double& x : w) x *= inv_f;
  std::vector<std::uint8_t> y = involvement;
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (w[i] != 0.0) total += w[i] * (y[i] != 0 ? neg_log(v[i]) : neg_log(1.0 - v[i]));
  }
  return scores.tape()->push(Matrix(1, 1, total), {scores}, [scores, w, y](ad::Tape& tape, int self) {
    const double g = tape.grad(self)[0];
    const Matrix& x = tape.value(scores);
    Matrix& gs = tape.grad(scores);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (w[i] == 0.0) continue;
      gs[i] += y[i] != 0 ? g * w[i] * neg_log_grad(x[i]) : -g * w[i] * neg_log_grad(1.0 - x[i]);
    }
  });
}

double localization_loss(const std::vector<LocalizationSample>& batch) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const LocalizationSample& s : batch) {
    ad::Tape tape(false);
    auto l = localization_loss(tape.constant(Matrix(s.scores.size(), 1, s.scores)), s.objects, s.involvement, s.mask);
    if (!l) continue;
    sum += l->scalar();
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

double phase_loss(const PhaseInputs& inputs, const LossConfig& cfg) {
  cfg.validate();
  if (cfg.phase == 2) return localization_loss(inputs.localization);
  std::vector<double> la;
  std::vector<std::uint8_t> y;
  for (std::size_t i = 0; i < inputs.traces.size(); ++i) {
    la.push_back(inputs.traces[i].l_a);
    y.push_back(inputs.targets.at(i).label == Label::positive ? 1 : 0);
  }
  return score_loss(inputs.traces, inputs.targets, cfg) + cfg.eta * anticipation_loss(la, y);
}

}  // namespace accident::training
