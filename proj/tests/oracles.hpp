#pragma once

// Exhaustive reference implementations of the evaluation metrics. They share
// no code with the library: no sorting, no early exits, direct counting.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "accident/metrics/metrics.hpp"

namespace oracle {

/// Each positive's rank is counted directly (higher score first, earlier
/// index first on ties); precision at that rank is averaged over positives.
inline double ap(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double sum = 0.0;
  int npos = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    ++npos;
    auto before = [&](std::size_t j) { return s[j] > s[i] || (s[j] == s[i] && j <= i); };
    int rank = 0, tp = 0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!before(j)) continue;
      ++rank;
      tp += y[j];
    }
    sum += static_cast<double>(tp) / rank;
  }
  return sum / npos;
}

/// Tries every start frame and checks the whole window [t, tau].
inline double tta(const std::vector<double>& s, double theta, int tau, int fps) {
  for (int t = 1; t <= tau; ++t) {
    bool held = true;
    for (int u = t; u <= tau; ++u) held = held && s[static_cast<std::size_t>(u - 1)] >= theta;
    if (held) return static_cast<double>(tau - t) / fps;
  }
  return 0.0;
}

inline double mean_tta(const accident::metrics::EvalBundle& b, double theta) {
  double sum = 0.0;
  int n = 0;
  for (const auto& c : b.clips) {
    if (c.label != accident::Label::positive) continue;
    sum += tta(c.trace.s, theta, *c.accident_frame, c.fps);
    ++n;
  }
  return sum / n;
}

inline double mtta(const accident::metrics::EvalBundle& b) {
  double sum = 0.0;
  int n = 0;
  for (double theta : b.threshold_grid)
    for (const auto& c : b.clips) {
      if (c.label != accident::Label::positive) continue;
      sum += tta(c.trace.s, theta, *c.accident_frame, c.fps);
      ++n;
    }
  return sum / n;
}

/// Every positive score value is a candidate; keeps the largest whose
/// positive-frame recall reaches the target. Empty when none does.
inline std::optional<double> tta_at_recall(const accident::metrics::EvalBundle& b, double target = 0.8) {
  std::optional<double> best;
  for (const auto& ci : b.clips)
    for (double theta : ci.trace.s) {
      if (theta <= 0.0) continue;
      int hit = 0, total = 0;
      for (const auto& c : b.clips) {
        if (c.label != accident::Label::positive) continue;
        for (double v : c.trace.s) {
          ++total;
          hit += v >= theta;
        }
      }
      if (static_cast<double>(hit) / total >= target && (!best || theta > *best)) best = theta;
    }
  if (!best) return std::nullopt;
  return mean_tta(b, *best);
}

inline double aola(const accident::metrics::EvalBundle& b) {
  int correct = 0, total = 0;
  for (const auto& c : b.clips)
    for (std::size_t i = 0; i < c.mask.size(); ++i) {
      if (!c.mask[i]) continue;
      ++total;
      correct += (c.localization->obj_scores[i] > 0.5) == (c.involvement[i] == 1);
    }
  return static_cast<double>(correct) / total;
}

/// Random bundle with at most 12 scored frames in total, scores drawn from a
/// coarse set so ties are common, at least one positive and one negative clip.
inline accident::metrics::EvalBundle random_bundle(std::mt19937_64& rng) {
  using namespace accident;
  std::uniform_int_distribution<int> clips_d(2, 4), coarse(0, 8), fps_d(1, 30);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  metrics::EvalBundle b;
  const int n_clips = clips_d(rng);
  const int per_clip = 12 / n_clips;
  for (int k = 0; k < n_clips; ++k) {
    metrics::ClipEval c;
    c.clip_id = "c" + std::to_string(k);
    c.label = k == 0 || (k > 1 && u(rng) < 0.5) ? Label::positive : Label::negative;
    c.fps = fps_d(rng);
    const int T = std::uniform_int_distribution<int>(1, per_clip)(rng);
    for (int t = 0; t < T; ++t) c.trace.s.push_back(u(rng) < 0.5 ? coarse(rng) / 8.0 : u(rng));
    c.trace.l_a = u(rng);
    if (c.label == Label::positive) c.accident_frame = std::uniform_int_distribution<int>(1, T)(rng);
    const std::size_t N = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 3)(rng));
    std::vector<double> scores;
    for (int i = 0; i < T * static_cast<int>(N); ++i) {
      c.mask.push_back(u(rng) < 0.7);
      c.involvement.push_back(c.mask.back() && c.label == Label::positive && u(rng) < 0.4);
      scores.push_back(u(rng) < 0.2 ? 0.5 : u(rng));
    }
    c.localization = heads::make_localization_trace(static_cast<std::size_t>(T), N, scores, c.mask, 2);
    b.clips.push_back(std::move(c));
  }
  if (u(rng) < 0.5) b.threshold_grid = metrics::default_threshold_grid(std::uniform_int_distribution<int>(1, 9)(rng));
  return b;
}

}  // namespace oracle
