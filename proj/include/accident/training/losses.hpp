#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "accident/autodiff.hpp"
#include "accident/dataset/clip_pack.hpp"
#include "accident/heads/anticipation.hpp"

namespace accident::training {

inline constexpr double kLogFloor = 1e-12;

struct LossConfig {
  double lambda = 20.0;
  double eta = 10.0;
  int phase = 1;

  /// Raises ConfigError on lambda <= 0, eta < 0 or an unknown phase.
  void validate() const;
};

struct ClipTarget {
  Label label = Label::negative;
  std::optional<int> accident_frame;
};

/// exp(-max((tau - t) / lambda, 0)) for 1-indexed frame t.
double score_weight(int t, int tau, double lambda);

/// Per-clip score loss, (1/T) sum_t w_t * BCE(s_t). s: T x 1.
ad::Var score_loss(ad::Var s, const ClipTarget& target, double lambda);
/// Batch mean of the per-clip score loss.
double score_loss(const std::vector<heads::ScoreTrace>& traces, const std::vector<ClipTarget>& targets,
                  const LossConfig& cfg);

/// Binary cross-entropy of the clip probability (1 x 1).
ad::Var anticipation_loss(ad::Var l_a, Label label);
double anticipation_loss(std::span<const double> l_a, std::span<const std::uint8_t> labels);

/// Per-clip localization loss: mean over frames with an occupied slot of the
/// mean BCE over occupied slots. Empty when the clip has no occupied slot.
/// scores: (T*N) x 1.
std::optional<ad::Var> localization_loss(ad::Var scores, std::size_t n_objects,
                                         const std::vector<std::uint8_t>& involvement,
                                         const std::vector<std::uint8_t>& mask);

struct LocalizationSample {
  std::size_t objects = 0;               // N
  std::vector<double> scores;            // T x N
  std::vector<std::uint8_t> involvement;  // T x N
  std::vector<std::uint8_t> mask;         // T x N
};
/// Mean over clips that have any occupied slot; 0 when none has.
double localization_loss(const std::vector<LocalizationSample>& batch);

struct PhaseInputs {
  std::vector<heads::ScoreTrace> traces;
  std::vector<ClipTarget> targets;
  std::vector<LocalizationSample> localization;
};

/// Phase 1: L_S + eta * L_A. Phase 2: L_M.
double phase_loss(const PhaseInputs& inputs, const LossConfig& cfg);

}  // namespace accident::training
