#include "accident/config.hpp"

#include <fstream>
#include <iterator>
#include <set>

#include "accident/errors.hpp"

namespace accident {

namespace {

using nlohmann::json;

/// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& doc, std::string name) : name_(std::move(name)) {
    if (!doc.is_object()) throw ConfigError("'" + name_ + "' must be an object");
    doc_ = &doc;
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = doc_->find(key);
    if (it == doc_->end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + name_ + "." + key + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = doc_->find(key);
    return it == doc_->end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = doc_->begin(); it != doc_->end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown key '" + (name_.empty() ? "" : name_ + ".") + it.key() + "'");
      }
    }
  }

 private:
  const json* doc_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

void RunConfig::validate() const {
  require(!dataset.profile.empty(), "dataset.profile must be set");
  (void)parse_profile(dataset.profile);
  require(synth.frames >= 1 && synth.fps >= 1, "synth.frames and synth.fps must be positive");
  require(synth.accident_frame >= 1 && synth.accident_frame <= synth.frames, "synth.accident_frame must lie in [1, frames]");
  require(synth.num_agents >= 2 && static_cast<std::size_t>(synth.num_agents) <= synth.max_objects,
          "synth.num_agents must lie in [2, max_objects]");
  require(synth.speed_min > 0.0 && synth.speed_max >= synth.speed_min, "synth speeds must satisfy 0 < min <= max");
  require(synth.noise_sigma >= 0.0, "synth.noise_sigma must be non-negative");

  require(model.frame_dim > 0 && model.object_dim > 0 && model.routing_dim > 0 && model.fused_dim > 0,
          "model dimensions must be positive");
  require(model.down_factor >= 1, "model.down_factor must be at least 1");
  require(model.qk_dim > 0, "model.qk_dim must be positive");
  require(model.n_iter_train >= 0 && model.n_iter_test >= 0, "routing iteration counts must be non-negative");
  require(model.dropout >= 0.0 && model.dropout < 1.0, "routing.dropout must lie in [0, 1)");
  require(!model.branch_kernels.empty(), "heads.branch_kernels must not be empty");
  for (std::size_t k : model.branch_kernels) require(k >= 1, "heads.branch_kernels entries must be positive");
  require(model.d_k > 0 && model.top_k > 0, "heads.d_k and heads.top_k must be positive");
  require(model.anticipation_hidden > 0 && model.anticipation_mlp > 0 && model.branch_channels > 0 &&
              model.proj_hidden > 0 && model.localization_hidden > 0,
          "head widths must be positive");

  training::LossConfig l = loss;
  l.phase = 1;
  l.validate();
  train.validate();

  require(metrics.threshold_grid_size >= 1, "metrics.threshold_grid_size must be at least 1");
  require(metrics.ap_mode == "frame" || metrics.ap_mode == "clip", "metrics.ap_mode must be 'frame' or 'clip'");

  require(alerts.client == "mock" || alerts.client == "http", "alerts.client must be 'mock' or 'http'");
  require(alerts.client != "http" || !alerts.endpoint.empty(), "alerts.endpoint is required for the http client");
  require(alerts.template_version == alerts::kTemplateV1, "unknown alerts.template_version");
  require(alerts.threshold > 0.0 && alerts.threshold < 1.0, "alerts.threshold must lie in (0, 1)");
  require(alerts.persistence >= 1, "alerts.persistence must be at least 1");
  require(alerts.reference_frame >= 1, "alerts.reference_frame must be at least 1");
  require(alerts.timeout_seconds > 0.0, "alerts.timeout_seconds must be positive");
  require(alerts.retries >= 0, "alerts.retries must be non-negative");
  require(alerts.backoff_seconds >= 0.0, "alerts.backoff_seconds must be non-negative");
  require(alerts.max_tokens >= 1, "alerts.max_tokens must be positive");
  require(!output_dir.empty(), "output.dir must not be empty");
}

synth::ScenarioParams RunConfig::scenario() const {
  synth::ScenarioParams p;
  p.num_agents = synth.num_agents;
  p.frames = synth.frames;
  p.fps = synth.fps;
  p.accident_frame = synth.accident_frame;
  p.speed_min = synth.speed_min;
  p.speed_max = synth.speed_max;
  p.noise_sigma = synth.noise_sigma;
  p.embed_seed = synth.embed_seed;
  p.frame_dim = model.frame_dim;
  p.object_dim = model.object_dim;
  p.max_objects = synth.max_objects;
  return p;
}

metrics::ApMode RunConfig::ap_mode() const {
  return metrics.ap_mode == "clip" ? metrics::ApMode::clip : metrics::ApMode::frame;
}

alerts::AlertSettings RunConfig::alert_settings() const {
  return {alerts.threshold, alerts.persistence, alerts.reference_frame, model.top_k};
}

alerts::HttpClientConfig RunConfig::http_config() const {
  alerts::HttpClientConfig c;
  c.endpoint = alerts.endpoint;
  c.model = alerts.model;
  c.max_tokens = alerts.max_tokens;
  c.timeout_seconds = alerts.timeout_seconds;
  c.retries = alerts.retries;
  c.backoff_seconds = alerts.backoff_seconds;
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  const ModelConfig& m = c.model;
  return {
      {"dataset", {{"manifest", c.dataset.manifest}, {"profile", c.dataset.profile}}},
      {"synth",
       {{"positives", c.synth.positives},
        {"negatives", c.synth.negatives},
        {"frames", c.synth.frames},
        {"fps", c.synth.fps},
        {"accident_frame", c.synth.accident_frame},
        {"num_agents", c.synth.num_agents},
        {"speed_min", c.synth.speed_min},
        {"speed_max", c.synth.speed_max},
        {"noise_sigma", c.synth.noise_sigma},
        {"embed_seed", c.synth.embed_seed},
        {"max_objects", c.synth.max_objects}}},
      {"model",
       {{"frame_dim", m.frame_dim},
        {"object_dim", m.object_dim},
        {"routing_dim", m.routing_dim},
        {"fused_dim", m.fused_dim},
        {"down_factor", m.down_factor},
        {"qk_dim", m.qk_dim},
        {"init_seed", m.init_seed}}},
      {"routing",
       {{"n_iter_train", m.n_iter_train},
        {"n_iter_test", m.n_iter_test},
        {"noise", std::string(fusion::to_string(m.noise))},
        {"dropout", m.dropout}}},
      {"heads",
       {{"anticipation_hidden", m.anticipation_hidden},
        {"anticipation_mlp", m.anticipation_mlp},
        {"branch_channels", m.branch_channels},
        {"branch_kernels", m.branch_kernels},
        {"proj_hidden", m.proj_hidden},
        {"d_k", m.d_k},
        {"localization_hidden", m.localization_hidden},
        {"top_k", m.top_k}}},
      {"loss", {{"lambda", c.loss.lambda}, {"eta", c.loss.eta}}},
      {"train",
       {{"learning_rate", c.train.learning_rate},
        {"batch_size", c.train.batch_size},
        {"epochs", c.train.epochs},
        {"plateau_patience", c.train.plateau_patience},
        {"plateau_factor", c.train.plateau_factor},
        {"seed", c.train.seed}}},
      {"metrics", {{"threshold_grid_size", c.metrics.threshold_grid_size}, {"ap_mode", c.metrics.ap_mode}}},
      {"alerts",
       {{"client", c.alerts.client},
        {"endpoint", c.alerts.endpoint},
        {"model", c.alerts.model},
        {"template_version", c.alerts.template_version},
        {"threshold", c.alerts.threshold},
        {"persistence", c.alerts.persistence},
        {"reference_frame", c.alerts.reference_frame},
        {"timeout_seconds", c.alerts.timeout_seconds},
        {"retries", c.alerts.retries},
        {"backoff_seconds", c.alerts.backoff_seconds},
        {"max_tokens", c.alerts.max_tokens}}},
      {"output", {{"dir", c.output_dir}}},
  };
}

RunConfig from_json(const nlohmann::json& doc) {
  RunConfig c;
  Section root(doc, "");
  if (const json* j = root.child("dataset")) {
    Section s(*j, "dataset");
    s.get("manifest", c.dataset.manifest);
    s.get("profile", c.dataset.profile);
    s.finish();
  }
  if (const json* j = root.child("synth")) {
    Section s(*j, "synth");
    s.get("positives", c.synth.positives);
    s.get("negatives", c.synth.negatives);
    s.get("frames", c.synth.frames);
    s.get("fps", c.synth.fps);
    s.get("accident_frame", c.synth.accident_frame);
    s.get("num_agents", c.synth.num_agents);
    s.get("speed_min", c.synth.speed_min);
    s.get("speed_max", c.synth.speed_max);
    s.get("noise_sigma", c.synth.noise_sigma);
    s.get("embed_seed", c.synth.embed_seed);
    s.get("max_objects", c.synth.max_objects);
    s.finish();
  }
  ModelConfig& m = c.model;
  if (const json* j = root.child("model")) {
    Section s(*j, "model");
    s.get("frame_dim", m.frame_dim);
    s.get("object_dim", m.object_dim);
    s.get("routing_dim", m.routing_dim);
    s.get("fused_dim", m.fused_dim);
    s.get("down_factor", m.down_factor);
    s.get("qk_dim", m.qk_dim);
    s.get("init_seed", m.init_seed);
    s.finish();
  }
  if (const json* j = root.child("routing")) {
    Section s(*j, "routing");
    s.get("n_iter_train", m.n_iter_train);
    s.get("n_iter_test", m.n_iter_test);
    std::string noise(fusion::to_string(m.noise));
    s.get("noise", noise);
    m.noise = fusion::parse_noise_mode(noise);
    s.get("dropout", m.dropout);
    s.finish();
  }
  if (const json* j = root.child("heads")) {
    Section s(*j, "heads");
    s.get("anticipation_hidden", m.anticipation_hidden);
    s.get("anticipation_mlp", m.anticipation_mlp);
    s.get("branch_channels", m.branch_channels);
    s.get("branch_kernels", m.branch_kernels);
    s.get("proj_hidden", m.proj_hidden);
    s.get("d_k", m.d_k);
    s.get("localization_hidden", m.localization_hidden);
    s.get("top_k", m.top_k);
    s.finish();
  }
  if (const json* j = root.child("loss")) {
    Section s(*j, "loss");
    s.get("lambda", c.loss.lambda);
    s.get("eta", c.loss.eta);
    s.finish();
  }
  if (const json* j = root.child("train")) {
    Section s(*j, "train");
    s.get("learning_rate", c.train.learning_rate);
    s.get("batch_size", c.train.batch_size);
    s.get("epochs", c.train.epochs);
    s.get("plateau_patience", c.train.plateau_patience);
    s.get("plateau_factor", c.train.plateau_factor);
    s.get("seed", c.train.seed);
    s.finish();
  }
  if (const json* j = root.child("metrics")) {
    Section s(*j, "metrics");
    s.get("threshold_grid_size", c.metrics.threshold_grid_size);
    s.get("ap_mode", c.metrics.ap_mode);
    s.finish();
  }
  if (const json* j = root.child("alerts")) {
    Section s(*j, "alerts");
    s.get("client", c.alerts.client);
    s.get("endpoint", c.alerts.endpoint);
    s.get("model", c.alerts.model);
    s.get("template_version", c.alerts.template_version);
    s.get("threshold", c.alerts.threshold);
    s.get("persistence", c.alerts.persistence);
    s.get("reference_frame", c.alerts.reference_frame);
    s.get("timeout_seconds", c.alerts.timeout_seconds);
    s.get("retries", c.alerts.retries);
    s.get("backoff_seconds", c.alerts.backoff_seconds);
    s.get("max_tokens", c.alerts.max_tokens);
    s.finish();
  }
  if (const json* j = root.child("output")) {
    Section s(*j, "output");
    s.get("dir", c.output_dir);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::string dump_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace accident
