#include "accident/alerts/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "accident/errors.hpp"

namespace accident::alerts {

namespace {

constexpr std::string_view kSystemV1 =
    "You are an in-vehicle safety assistant. Read the scene summary and issue one short, clear spoken "
    "warning to the driver about the most likely collision. Mention the time remaining and the agent involved.";

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::optional<std::string> field_after(const std::string& text, std::string_view key) {
  const std::size_t pos = text.find(key);
  if (pos == std::string::npos) return std::nullopt;
  const std::size_t start = pos + key.size();
  const std::size_t end = text.find_first_of(" \n,", start);
  return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

void SceneAnnotation::validate() const {
  if (clip_id.empty()) throw ValidationError("clip_id", "must not be empty");
  if (current_frame < 1) throw ValidationError("current_frame", "must be at least 1");
  if (!(accident_probability >= 0.0 && accident_probability <= 1.0)) {
    throw ValidationError("accident_probability", "must lie in [0, 1]");
  }
  if (!(predicted_tta_seconds >= 0.0) || !std::isfinite(predicted_tta_seconds)) {
    throw ValidationError("predicted_tta_seconds", "must be finite and non-negative");
  }
  if (!(threshold_used >= 0.0 && threshold_used <= 1.0)) throw ValidationError("threshold_used", "must lie in [0, 1]");
  for (std::size_t i = 1; i < involved_objects.size(); ++i) {
    if (involved_objects[i].score > involved_objects[i - 1].score) {
      throw ValidationError("involved_objects", "must be sorted by descending score");
    }
  }
}

PromptBundle build_prompt(const SceneAnnotation& ann, std::string_view template_version) {
  if (template_version != kTemplateV1) {
    throw ConfigError("unknown prompt template '" + std::string(template_version) + "'");
  }
  ann.validate();
  std::ostringstream u;
  u << "Clip: " << ann.clip_id << '\n'
    << "Frame: " << ann.current_frame << '\n'
    << "Alert threshold: " << fixed(ann.threshold_used, 2) << '\n'
    << "Accident probability: " << fixed(ann.accident_probability, 2) << '\n'
    << "Predicted time to accident: " << fixed(ann.predicted_tta_seconds, 2) << " s\n"
    << "Involved objects:\n";
  if (ann.involved_objects.empty()) u << kNoObjectsLine << '\n';
  for (const InvolvedObject& o : ann.involved_objects) {
    u << "- slot " << o.slot << ", score " << fixed(o.score, 2) << ", box [" << fixed(o.box[0], 3) << ", "
      << fixed(o.box[1], 3) << ", " << fixed(o.box[2], 3) << ", " << fixed(o.box[3], 3) << "], category "
      << o.category << '\n';
  }
  PromptBundle b;
  b.template_version = std::string(template_version);
  b.system_text = std::string(kSystemV1);
  b.user_text = u.str();
  return b;
}

std::string mock_alert(const PromptBundle& bundle) {
  const std::string tta = field_after(bundle.user_text, "Predicted time to accident: ").value_or("?");
  const std::string prob = field_after(bundle.user_text, "Accident probability: ").value_or("?");
  const std::optional<std::string> slot = field_after(bundle.user_text, "- slot ");
  if (!slot) return "Warning: possible accident in " + tta + "s, no specific agent identified (p=" + prob + ").";
  return "Warning: possible accident in " + tta + "s involving object " + *slot + " (p=" + prob + ").";
}

std::optional<int> first_alert_frame(std::span<const double> s, double theta, int persistence) {
  if (persistence < 1) throw ConfigError("alert persistence must be at least 1");
  int run = 0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    run = s[t] > theta ? run + 1 : 0;
    if (run >= persistence) return static_cast<int>(t + 1);
  }
  return std::nullopt;
}

std::optional<SceneAnnotation> annotate(const ClipPack& clip, const Prediction& prediction,
                                        const AlertSettings& settings) {
  const std::vector<double>& s = prediction.scores.s;
  std::optional<int> frame = first_alert_frame(s, settings.threshold, settings.persistence);
  if (!frame) return std::nullopt;
  SceneAnnotation ann;
  ann.clip_id = clip.clip_id;
  ann.current_frame = *frame;
  ann.accident_probability = s[static_cast<std::size_t>(*frame - 1)];
  ann.predicted_tta_seconds =
      clip.fps > 0 ? static_cast<double>(std::max(settings.reference_frame - *frame, 0)) / clip.fps : 0.0;
  ann.threshold_used = settings.threshold;
  if (prediction.localization) {
    const heads::LocalizationTrace& loc = *prediction.localization;
    const std::size_t t = static_cast<std::size_t>(*frame - 1);
    const std::span<const double> row(loc.obj_scores.data() + t * loc.objects, loc.objects);
    const std::span<const std::uint8_t> mask(clip.object_mask.data() + t * clip.objects, clip.objects);
    for (std::size_t n : heads::top_k(row, mask, settings.top_k)) {
      if (!(row[n] > 0.5)) continue;
      InvolvedObject o;
      o.slot = n;
      o.score = row[n];
      for (std::size_t k = 0; k < 4; ++k) o.box[k] = clip.boxes[(t * clip.objects + n) * 4 + k];
      if (n < clip.categories.size() && !clip.categories[n].empty()) o.category = clip.categories[n];
      ann.involved_objects.push_back(std::move(o));
    }
  }
  return ann;
}

}  // namespace accident::alerts
