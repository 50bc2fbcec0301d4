#include "accident/metrics/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "accident/errors.hpp"

namespace accident::metrics {

namespace {

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

void check_inputs(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
}

struct Population {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
};

Population ap_population(const EvalBundle& bundle, ApMode mode) {
  Population p;
  for (const ClipEval& c : bundle.clips) {
    const std::uint8_t y = c.label == Label::positive ? 1 : 0;
    if (mode == ApMode::frame) {
      p.scores.insert(p.scores.end(), c.trace.s.begin(), c.trace.s.end());
      p.labels.insert(p.labels.end(), c.trace.s.size(), y);
    } else {
      p.scores.push_back(c.trace.s.empty() ? 0.0 : *std::max_element(c.trace.s.begin(), c.trace.s.end()));
      p.labels.push_back(y);
    }
  }
  return p;
}

int clip_tau(const ClipEval& c) {
  if (!c.accident_frame) throw ValidationError("accident_frame", "positive clip " + c.clip_id + " has no accident frame");
  return *c.accident_frame;
}

double mean_tta_at(const EvalBundle& bundle, double theta) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const ClipEval& c : bundle.clips) {
    if (c.label != Label::positive) continue;
    sum += tta(c.trace.s, theta, clip_tau(c), c.fps);
    ++n;
  }
  if (n == 0) throw UndefinedError("no positive clips");
  return sum / static_cast<double>(n);
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  const std::size_t npos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
  if (npos == 0) throw UndefinedError("average precision needs at least one positive");
  double sum = 0.0;
  std::size_t tp = 0;
  std::size_t rank = 0;
  for (std::size_t i : rank_order(scores)) {
    ++rank;
    if (labels[i] != 0) {
      ++tp;
      sum += static_cast<double>(tp) / static_cast<double>(rank);
    }
  }
  return sum / static_cast<double>(npos);
}

std::vector<PrPoint> precision_recall_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  check_inputs(scores, labels);
  const std::size_t npos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
  std::vector<PrPoint> out;
  if (npos == 0) return out;
  std::size_t tp = 0;
  std::size_t rank = 0;
  for (std::size_t i : rank_order(scores)) {
    ++rank;
    if (labels[i] != 0) ++tp;
    out.push_back({static_cast<double>(tp) / static_cast<double>(npos),
                   static_cast<double>(tp) / static_cast<double>(rank)});
  }
  return out;
}

int persistent_crossing(std::span<const double> s, double theta, int tau) {
  if (tau < 1 || static_cast<std::size_t>(tau) > s.size()) {
    throw ValidationError("accident_frame", "tau " + std::to_string(tau) + " outside [1, T]");
  }
  int start = 0;
  for (int t = tau; t >= 1; --t) {
    if (s[static_cast<std::size_t>(t - 1)] >= theta) {
      start = t;
    } else {
      break;
    }
  }
  return start;
}

double tta(std::span<const double> s, double theta, int tau, int fps) {
  if (fps <= 0) throw ValidationError("fps", "must be positive");
  const int t = persistent_crossing(s, theta, tau);
  if (t == 0) return 0.0;
  return static_cast<double>(std::max(tau - t, 0)) / static_cast<double>(fps);
}

std::vector<double> default_threshold_grid(std::size_t n) {
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  return grid;
}

double bundle_ap(const EvalBundle& bundle, ApMode mode) {
  Population p = ap_population(bundle, mode);
  return average_precision(p.scores, p.labels);
}

double mtta(const EvalBundle& bundle) {
  if (bundle.threshold_grid.empty()) throw ConfigError("empty threshold grid");
  double sum = 0.0;
  for (double theta : bundle.threshold_grid) sum += mean_tta_at(bundle, theta);
  return sum / static_cast<double>(bundle.threshold_grid.size());
}

double tta_at_recall(const EvalBundle& bundle, double target) {
  std::vector<double> positives;
  for (const ClipEval& c : bundle.clips) {
    if (c.label == Label::positive) positives.insert(positives.end(), c.trace.s.begin(), c.trace.s.end());
  }
  if (positives.empty()) throw UndefinedError("recall undefined without positive frames");
  std::sort(positives.begin(), positives.end());
  std::set<double> candidates;
  for (const ClipEval& c : bundle.clips) {
    for (double v : c.trace.s) {
      if (v > 0.0) candidates.insert(v);
    }
  }
  const double total = static_cast<double>(positives.size());
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    const double theta = *it;
    const auto tp = static_cast<double>(positives.end() - std::lower_bound(positives.begin(), positives.end(), theta));
    if (tp / total >= target) return mean_tta_at(bundle, theta);
  }
  throw UndefinedError("no positive threshold reaches frame-level recall " + std::to_string(target));
}

double aola(const EvalBundle& bundle) {
  std::size_t correct = 0;
  std::size_t total = 0;
  bool any = false;
  for (const ClipEval& c : bundle.clips) {
    if (!c.localization || c.involvement.empty()) continue;
    any = true;
    const heads::LocalizationTrace& l = *c.localization;
    if (c.involvement.size() != l.obj_scores.size() || c.mask.size() != l.obj_scores.size()) {
      throw ShapeError("localization trace and ground truth differ in shape");
    }
    for (std::size_t i = 0; i < l.obj_scores.size(); ++i) {
      if (c.mask[i] == 0) continue;
      ++total;
      const bool predicted = l.obj_scores[i] > 0.5;
      if (predicted == (c.involvement[i] != 0)) ++correct;
    }
  }
  if (!any) throw ConfigError("no localization data in the bundle");
  if (total == 0) throw UndefinedError("no occupied object slots");
  return static_cast<double>(correct) / static_cast<double>(total);
}

Summary summarize(const EvalBundle& bundle, ApMode mode) {
  Summary s;
  auto attempt = [](auto&& fn) -> std::optional<double> {
    try {
      return fn();
    } catch (const UndefinedError&) {
      return std::nullopt;
    } catch (const ConfigError&) {
      return std::nullopt;
    }
  };
  s.ap = attempt([&] { return bundle_ap(bundle, mode); });
  s.mtta = attempt([&] { return mtta(bundle); });
  s.tta_r80 = attempt([&] { return tta_at_recall(bundle); });
  s.aola = attempt([&] { return aola(bundle); });
  return s;
}

}  // namespace accident::metrics
