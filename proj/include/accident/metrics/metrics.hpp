#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accident/dataset/clip_pack.hpp"
#include "accident/heads/anticipation.hpp"
#include "accident/heads/localization.hpp"

namespace accident::metrics {

/// Average precision: stable descending sort (ties keep input order), then
/// the sum of precision at every rank that consumes a positive, divided by
/// the number of positives. Raises UndefinedError without positives.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};
/// One point per rank of the same sweep average_precision walks.
std::vector<PrPoint> precision_recall_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Earliest 1-indexed frame t such that s_u >= theta for every u in [t, tau];
/// 0 when no such frame exists. Raises ValidationError if tau is outside [1, T].
int persistent_crossing(std::span<const double> s, double theta, int tau);
/// (tau - t_theta) / fps seconds, 0 when the threshold is never held.
double tta(std::span<const double> s, double theta, int tau, int fps);

/// theta_i = i / (n + 1), i = 1..n.
std::vector<double> default_threshold_grid(std::size_t n = 100);

struct ClipEval {
  std::string clip_id;
  Label label = Label::negative;
  std::optional<int> accident_frame;
  int fps = 0;
  heads::ScoreTrace trace;
  std::optional<heads::LocalizationTrace> localization;
  std::vector<std::uint8_t> involvement;  // T x N ground truth, may be empty
  std::vector<std::uint8_t> mask;         // T x N
};

struct EvalBundle {
  std::vector<ClipEval> clips;
  std::vector<double> threshold_grid = default_threshold_grid();
};

enum class ApMode { frame, clip };

/// Frame-level: every frame of every clip, labelled with its clip label.
/// Clip-level: one score per clip, max_t s_t.
double bundle_ap(const EvalBundle& bundle, ApMode mode = ApMode::frame);
/// Mean TTA over positive clips and the threshold grid.
double mtta(const EvalBundle& bundle);
/// Mean TTA at the largest score threshold whose frame-level recall reaches
/// `target`. Raises UndefinedError when no threshold does.
double tta_at_recall(const EvalBundle& bundle, double target = 0.8);
/// Correct occupied-slot predictions over occupied slots. Raises ConfigError
/// without localization data.
double aola(const EvalBundle& bundle);

struct Summary {
  std::optional<double> ap;
  std::optional<double> mtta;
  std::optional<double> tta_r80;
  std::optional<double> aola;
};

/// Every metric that is defined for the bundle; undefined ones stay empty.
Summary summarize(const EvalBundle& bundle, ApMode mode = ApMode::frame);

/// Writes scores.csv (clip_id,t,s), pr_curve.csv (recall,precision) and
/// tta_sweep.csv (theta,mean_tta) into `out_dir`.
void export_curves(const EvalBundle& bundle, const std::filesystem::path& out_dir, ApMode mode = ApMode::frame);

}  // namespace accident::metrics
