#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "accident/dataset/manifest.hpp"
#include "accident/metrics/metrics.hpp"
#include "accident/model.hpp"
#include "accident/training/losses.hpp"

namespace accident::training {

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 16;
  int epochs = 10;
  int plateau_patience = 3;
  double plateau_factor = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss_score = 0.0;         // NaN in phase 2
  double loss_anticipation = 0.0;  // NaN in phase 2
  double loss_localization = 0.0;  // NaN in phase 1
  double val_ap = 0.0;
  double val_mtta = 0.0;
  double val_aola = 0.0;  // NaN in phase 1
  double lr = 0.0;        // rate used during this epoch
  bool lr_reduced = false;
};

struct TrainHistory {
  int phase = 1;
  std::vector<EpochRecord> epochs;
  int lr_reductions = 0;
  double final_lr = 0.0;
};

/// Inference over `clips` with noise and dropout off.
metrics::EvalBundle evaluate(const AccidentModel& model, const std::vector<ClipPack>& clips,
                             std::optional<int> n_iter = std::nullopt, bool localization = true);

std::vector<ClipPack> load_split(const DatasetManifest& manifest, Split split);

/// Runs `config.epochs` epochs of the given phase. Phase 1 trains stage 1 and
/// the anticipation head on L_S + eta L_A; phase 2 trains only the
/// localization head on L_M. The validation metric driving the plateau
/// scheduler is AP in phase 1 and AOLA in phase 2.
TrainHistory train(AccidentModel& model, const std::vector<ClipPack>& train_clips,
                   const std::vector<ClipPack>& val_clips, const TrainConfig& config, const LossConfig& loss,
                   const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Loads both splits from the manifest first. Raises ConfigError for an
/// empty train split or a phase-2 run on a profile without involvement labels.
TrainHistory train(AccidentModel& model, const DatasetManifest& manifest, const TrainConfig& config,
                   const LossConfig& loss, const std::function<void(const EpochRecord&)>& on_epoch = {});

/// CSV with header epoch,L_S,L_A,L_M,val_AP,val_mTTA,lr; 9 significant digits.
std::string history_csv(const TrainHistory& history);
void write_history_csv(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace accident::training
