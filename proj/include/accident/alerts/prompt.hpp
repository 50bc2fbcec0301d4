#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "accident/dataset/clip_pack.hpp"
#include "accident/model.hpp"

namespace accident::alerts {

inline constexpr std::string_view kTemplateV1 = "v1";
inline constexpr std::string_view kNoObjectsLine = "- none identified";

struct InvolvedObject {
  std::size_t slot = 0;
  std::array<double, 4> box{};  // x1, y1, x2, y2
  double score = 0.0;
  std::string category = "unknown";

  friend bool operator==(const InvolvedObject&, const InvolvedObject&) = default;
};

struct SceneAnnotation {
  std::string clip_id;
  int current_frame = 0;  // 1-indexed
  double accident_probability = 0.0;
  double predicted_tta_seconds = 0.0;
  std::vector<InvolvedObject> involved_objects;  // descending score
  double threshold_used = 0.0;

  /// Raises ValidationError naming the offending field.
  void validate() const;
  friend bool operator==(const SceneAnnotation&, const SceneAnnotation&) = default;
};

struct PromptBundle {
  std::string template_version;
  std::string system_text;
  std::string user_text;
  std::vector<std::uint8_t> attachment;  // opaque, passed through untouched

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// Raises ConfigError for an unknown template version.
PromptBundle build_prompt(const SceneAnnotation& ann, std::string_view template_version = kTemplateV1);

/// Offline stand-in for the language model: reads the rendered fields back
/// out of the user text.
std::string mock_alert(const PromptBundle& bundle);

struct AlertSettings {
  double threshold = 0.5;
  int persistence = 2;
  int reference_frame = 90;  // nominal accident frame used for the TTA estimate
  std::size_t top_k = 3;
};

/// 1-indexed frame at which `persistence` consecutive scores above `theta`
/// first complete.
std::optional<int> first_alert_frame(std::span<const double> s, double theta, int persistence);

/// Gated annotation for one clip; empty when the alert never triggers.
/// Involved objects are the top-k slots at the alert frame scoring above 0.5.
std::optional<SceneAnnotation> annotate(const ClipPack& clip, const Prediction& prediction,
                                        const AlertSettings& settings);

}  // namespace accident::alerts
