#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "accident/alerts/client.hpp"
#include "accident/metrics/metrics.hpp"
#include "accident/model.hpp"
#include "accident/synth/generator.hpp"
#include "accident/training/losses.hpp"
#include "accident/training/trainer.hpp"

namespace accident {

struct DatasetSection {
  std::string manifest;  // may be empty; --manifest overrides
  std::string profile = "synthetic";
  friend bool operator==(const DatasetSection&, const DatasetSection&) = default;
};

struct SynthSection {
  std::size_t positives = 150;
  std::size_t negatives = 150;
  int frames = 100;
  int fps = 20;
  int accident_frame = 90;
  int num_agents = 5;
  double speed_min = 0.03;
  double speed_max = 0.08;
  double noise_sigma = 0.002;
  std::uint64_t embed_seed = 1234;
  std::size_t max_objects = kDefaultMaxObjects;
  friend bool operator==(const SynthSection&, const SynthSection&) = default;
};

struct MetricsSection {
  std::size_t threshold_grid_size = 100;
  std::string ap_mode = "frame";  // "frame" or "clip"
  friend bool operator==(const MetricsSection&, const MetricsSection&) = default;
};

struct AlertSection {
  std::string client = "mock";  // "mock" or "http"
  std::string endpoint;
  std::string model = "alert-model";
  std::string template_version = "v1";
  double threshold = 0.5;
  int persistence = 2;
  int reference_frame = 90;
  double timeout_seconds = 10.0;
  int retries = 2;
  double backoff_seconds = 0.5;
  int max_tokens = 128;
  friend bool operator==(const AlertSection&, const AlertSection&) = default;
};

struct RunConfig {
  DatasetSection dataset;
  SynthSection synth;
  ModelConfig model;
  training::LossConfig loss;  // phase comes from the command line
  training::TrainConfig train;
  MetricsSection metrics;
  AlertSection alerts;
  std::string output_dir = "runs";

  /// Raises ConfigError on any out-of-range field.
  void validate() const;

  synth::ScenarioParams scenario() const;
  metrics::ApMode ap_mode() const;
  alerts::AlertSettings alert_settings() const;
  alerts::HttpClientConfig http_config() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Strict: unknown keys and wrong types raise ConfigError. Absent keys keep
/// their defaults.
RunConfig from_json(const nlohmann::json& doc);

RunConfig load_config(const std::filesystem::path& path);
/// Pretty-printed, keys sorted.
std::string dump_config(const RunConfig& config);

}  // namespace accident
