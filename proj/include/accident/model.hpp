#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "accident/dataset/clip_pack.hpp"
#include "accident/fusion/dual_vision.hpp"
#include "accident/fusion/fuse.hpp"
#include "accident/fusion/routing.hpp"
#include "accident/heads/anticipation.hpp"
#include "accident/heads/localization.hpp"

namespace accident {

struct ModelConfig {
  std::size_t frame_dim = 64;    // D_v
  std::size_t object_dim = 32;   // D_o
  std::size_t routing_dim = 32;  // D_r
  std::size_t fused_dim = 64;    // D_c
  std::size_t down_factor = 2;
  std::size_t qk_dim = 16;
  int n_iter_train = 6;
  int n_iter_test = 6;
  fusion::NoiseMode noise = fusion::NoiseMode::markov;
  double dropout = 0.1;
  std::size_t anticipation_hidden = 32;
  std::size_t anticipation_mlp = 32;
  std::size_t branch_channels = 16;
  std::vector<std::size_t> branch_kernels{3, 5, 7};
  std::size_t proj_hidden = 32;
  std::size_t d_k = 16;
  std::size_t localization_hidden = 16;
  std::size_t top_k = 3;
  std::uint64_t init_seed = 7;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Dense double-precision view of one clip.
struct ClipTensors {
  std::size_t frames = 0;
  std::size_t objects = 0;
  Matrix frame_features;   // T x D_v
  Matrix object_features;  // (T*N) x D_o
  std::vector<std::uint8_t> mask;
};

ClipTensors to_tensors(const ClipPack& clip);

struct ForwardOptions {
  bool training = false;
  int n_iter = 6;
  std::uint64_t seed = 0;
  bool anticipation = true;
  bool localization = true;
};

struct ForwardResult {
  ad::Var o_v;  // T x D_v, refined
  ad::Var o_b;  // (T*N) x D_r
  ad::Var o_c;  // T x D_c
  ad::Var scores;      // T x 1 (anticipation)
  ad::Var clip;        // 1 x 1 (anticipation)
  ad::Var attention;   // T x N (localization)
  ad::Var obj_scores;  // (T*N) x 1 (localization)
  fusion::RoutingState routing;
};

struct Prediction {
  heads::ScoreTrace scores;
  std::optional<heads::LocalizationTrace> localization;
};

/// Stage-1 fusion followed by the anticipation and localization heads.
/// Parameter groups: "stage1", "anticipation", "localization".
class AccidentModel {
 public:
  explicit AccidentModel(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  ad::ParameterSet& params() { return *params_; }
  const ad::ParameterSet& params() const { return *params_; }

  const fusion::DualVisionAttention& dual_vision() const { return dual_; }
  const fusion::DynamicObjectAttention& routing() const { return routing_; }
  const fusion::Fusion& fusion() const { return fusion_; }
  const heads::AnticipationHead& anticipation() const { return anticipation_; }
  const heads::LocalizationHead& localization() const { return localization_; }

  ForwardResult forward(ad::Tape& tape, const ClipTensors& clip, const ForwardOptions& options) const;

  /// Inference with noise and dropout off. n_iter defaults to n_iter_test.
  Prediction predict(const ClipTensors& clip, std::optional<int> n_iter = std::nullopt,
                     bool localization = true) const;

 private:
  ModelConfig config_;
  std::unique_ptr<ad::ParameterSet> params_;
  fusion::DualVisionAttention dual_;
  fusion::DynamicObjectAttention routing_;
  fusion::Fusion fusion_;
  heads::AnticipationHead anticipation_;
  heads::LocalizationHead localization_;
};

}  // namespace accident
