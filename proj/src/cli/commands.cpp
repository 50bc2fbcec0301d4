#include "accident/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "accident/config.hpp"
#include "accident/errors.hpp"
#include "accident/training/checkpoint.hpp"

namespace accident::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig load(const Options& opt) {
  RunConfig c = opt.config_path.empty() ? RunConfig{} : load_config(opt.config_path);
  if (opt.seed) c.train.seed = *opt.seed;
  c.validate();
  return c;
}

fs::path out_dir(const Options& opt, const RunConfig& c) { return opt.out.empty() ? fs::path(c.output_dir) : fs::path(opt.out); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

DatasetManifest open_manifest(const Options& opt, const RunConfig& c) {
  const std::string path = opt.manifest.empty() ? c.dataset.manifest : opt.manifest;
  if (path.empty()) throw ConfigError("no manifest given (--manifest or dataset.manifest)");
  if (!fs::exists(path)) throw IoError("manifest not found: " + path);
  return read_manifest(path, parse_profile(c.dataset.profile));
}

json metric(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

json checkpoint_metrics(const training::TrainHistory& h) {
  if (h.epochs.empty()) return json::object();
  const training::EpochRecord& r = h.epochs.back();
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"val_AP", num(r.val_ap)}, {"val_mTTA", num(r.val_mtta)}, {"val_AOLA", num(r.val_aola)}};
}

void require_checkpoint(const Options& opt, const char* why) {
  if (opt.checkpoint.empty()) throw MissingPrerequisiteError(std::string("--checkpoint is required ") + why);
  if (!fs::exists(opt.checkpoint)) throw MissingPrerequisiteError("checkpoint not found: " + opt.checkpoint);
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace

int exit_code_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return kInternal;
  const std::string& k = err->kind();
  if (k == "config" || k == "validation" || k == "shape" || k == "numeric" || k == "undefined") return kConfig;
  if (k == "io" || k == "format" || k == "corruption") return kIo;
  if (k == "missing_prerequisite") return kMissingPrerequisite;
  if (k == "delivery" || k == "remote") return kDelivery;
  return kInternal;
}

int cmd_synth(const Options& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig c = load(opt);
    const std::size_t pos = opt.positives.value_or(c.synth.positives);
    const std::size_t neg = opt.negatives.value_or(c.synth.negatives);
    const fs::path dir = opt.out.empty() ? fs::path(c.output_dir) / "data" : fs::path(opt.out);
    log << "generating " << pos << " positive and " << neg << " negative clips into " << dir.string() << '\n';
    synth::generate_dataset(c.train.seed, pos, neg, c.scenario(), dir);
    out << json{{"manifest", (dir / "manifest.jsonl").string()}, {"clips", pos + neg}}.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_train(const Options& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig c = load(opt);
    if (opt.phase != 1 && opt.phase != 2) throw ConfigError("--phase must be 1 or 2");
    DatasetManifest manifest = open_manifest(opt, c);
    const ProfileSpec& spec = profile_spec(manifest.profile);
    if (opt.phase == 2) {
      if (!spec.has_involvement) {
        throw MissingPrerequisiteError("profile '" + std::string(spec.name) +
                                       "' carries no object involvement labels; phase 2 cannot run");
      }
      require_checkpoint(opt, "for phase 2 (a phase-1 checkpoint)");
    }
    AccidentModel model(c.model);
    if (!opt.checkpoint.empty()) {
      if (!fs::exists(opt.checkpoint)) throw MissingPrerequisiteError("checkpoint not found: " + opt.checkpoint);
      training::load_checkpoint(opt.checkpoint, model.params());
      log << "loaded " << opt.checkpoint << '\n';
    }
    training::LossConfig loss = c.loss;
    loss.phase = opt.phase;
    const fs::path dir = out_dir(opt, c);
    ensure_dir(dir);
    training::TrainHistory h = training::train(model, manifest, c.train, loss, [&](const training::EpochRecord& r) {
      log << "phase " << opt.phase << " epoch " << r.epoch << ": L_S=" << fmt(r.loss_score)
          << " L_A=" << fmt(r.loss_anticipation) << " L_M=" << fmt(r.loss_localization) << " val_AP=" << fmt(r.val_ap)
          << " val_mTTA=" << fmt(r.val_mtta) << " val_AOLA=" << fmt(r.val_aola) << " lr=" << fmt(r.lr)
          << (r.lr_reduced ? " (reduced)" : "") << '\n';
    });
    const std::string tag = "phase" + std::to_string(opt.phase);
    const fs::path ckpt = dir / ("checkpoint_" + tag + ".ckpt");
    const fs::path hist = dir / ("history_" + tag + ".csv");
    training::Checkpoint meta;
    meta.config = to_json(c);
    meta.epoch = static_cast<int>(h.epochs.size());
    meta.metrics = checkpoint_metrics(h);
    training::save_checkpoint(ckpt, model.params(), meta);
    training::write_history_csv(h, hist);

    const training::EpochRecord& last = h.epochs.back();
    auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
    json result = {{"phase", opt.phase},
                   {"checkpoint", ckpt.string()},
                   {"history", hist.string()},
                   {"AP", num(last.val_ap)},
                   {"mTTA", num(last.val_mtta)}};
    if (opt.phase == 2) result["AOLA"] = num(last.val_aola);
    out << result.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const Options& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig c = load(opt);
    require_checkpoint(opt, "for evaluation");
    DatasetManifest manifest = open_manifest(opt, c);
    const bool localize = profile_spec(manifest.profile).has_involvement;
    AccidentModel model(c.model);
    training::load_checkpoint(opt.checkpoint, model.params());
    std::vector<ClipPack> clips = training::load_split(manifest, Split::test);
    if (clips.empty()) throw ConfigError("test split is empty");

    metrics::EvalBundle bundle = training::evaluate(model, clips, std::nullopt, localize);
    bundle.threshold_grid = metrics::default_threshold_grid(c.metrics.threshold_grid_size);
    metrics::Summary s = metrics::summarize(bundle, c.ap_mode());
    const fs::path dir = out_dir(opt, c);
    metrics::export_curves(bundle, dir / "curves", c.ap_mode());

    if (opt.sweep_iters) {
      const int top = std::max(1, c.model.n_iter_test);
      std::string csv = "n_iter,AP,mTTA\n";
      log << "n_iter      AP    mTTA\n";
      for (int n = 1; n <= top; ++n) {
        metrics::EvalBundle b = training::evaluate(model, clips, n, false);
        b.threshold_grid = bundle.threshold_grid;
        metrics::Summary r = metrics::summarize(b, c.ap_mode());
        const double ap = r.ap.value_or(std::nan(""));
        const double mt = r.mtta.value_or(std::nan(""));
        csv += std::to_string(n) + ',' + fmt(ap) + ',' + fmt(mt) + '\n';
        char line[64];
        std::snprintf(line, sizeof line, "%6d  %6.4f  %6.3f\n", n, ap, mt);
        log << line;
      }
      std::ofstream f(dir / "iter_sweep.csv", std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot write " + (dir / "iter_sweep.csv").string());
      f << csv;
    }

    json result = {{"AP", metric(s.ap)}, {"mTTA", metric(s.mtta)}, {"TTA@R80", metric(s.tta_r80)}, {"AOLA", metric(s.aola)}};
    out << result.dump() << '\n';
    return static_cast<int>(kOk);
  });
}

int cmd_alert(const Options& opt, std::ostream& out, std::ostream& log, alerts::AlertClient* client) {
  return guarded(log, [&] {
    RunConfig c = load(opt);
    require_checkpoint(opt, "for alerts");
    if (opt.clip.empty()) throw ConfigError("--clip is required");
    if (!fs::exists(opt.clip)) throw IoError("clip not found: " + opt.clip);
    ClipPack clip = read_clip_pack(opt.clip);
    AccidentModel model(c.model);
    training::load_checkpoint(opt.checkpoint, model.params());
    Prediction p = model.predict(to_tensors(clip));
    std::optional<alerts::SceneAnnotation> ann = alerts::annotate(clip, p, c.alert_settings());
    if (!ann) {
      out << "no alert\n";
      return static_cast<int>(kOk);
    }
    alerts::PromptBundle bundle = alerts::build_prompt(*ann, c.alerts.template_version);
    std::unique_ptr<alerts::AlertClient> owned;
    if (client == nullptr) {
      if (c.alerts.client == "http") {
        owned = std::make_unique<alerts::HttpClient>(c.http_config());
      } else {
        owned = std::make_unique<alerts::MockClient>();
      }
      client = owned.get();
    }
    log << "alert at frame " << ann->current_frame << " (s=" << fmt(ann->accident_probability) << ")\n";
    out << alerts::request_alert(bundle, *client) << '\n';
    return static_cast<int>(kOk);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& log) {
  CLI::App app{"Traffic accident anticipation, localization and alerting"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON run configuration");
    sub->add_option("--seed", seed, "random seed (overrides train.seed)");
    sub->add_option("--out", opt.out, "output directory");
  };

  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  common(synth_cmd);
  std::size_t positives = 0, negatives = 0;
  synth_cmd->add_option("--positives", positives, "number of collision clips");
  synth_cmd->add_option("--negatives", negatives, "number of collision-free clips");

  CLI::App* train_cmd = app.add_subcommand("train", "train one phase");
  common(train_cmd);
  train_cmd->add_option("--phase", opt.phase, "1: fusion + anticipation, 2: localization");
  train_cmd->add_option("--manifest", opt.manifest, "dataset manifest (JSONL)");
  train_cmd->add_option("--checkpoint", opt.checkpoint, "initial parameters (required for phase 2)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  common(eval_cmd);
  eval_cmd->add_option("--manifest", opt.manifest, "dataset manifest (JSONL)");
  eval_cmd->add_option("--checkpoint", opt.checkpoint, "trained parameters");
  eval_cmd->add_flag("--sweep-iters", opt.sweep_iters, "also evaluate every routing iteration count");

  CLI::App* alert_cmd = app.add_subcommand("alert", "issue a verbal alert for one clip");
  common(alert_cmd);
  alert_cmd->add_option("--checkpoint", opt.checkpoint, "trained parameters");
  alert_cmd->add_option("--clip", opt.clip, "clip file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, log);
    return code == 0 ? static_cast<int>(kOk) : static_cast<int>(kConfig);
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) opt.seed = seed;
  }
  if (synth_cmd->count("--positives") > 0) opt.positives = positives;
  if (synth_cmd->count("--negatives") > 0) opt.negatives = negatives;
  if (synth_cmd->parsed()) return cmd_synth(opt, out, log);
  if (train_cmd->parsed()) return cmd_train(opt, out, log);
  if (eval_cmd->parsed()) return cmd_eval(opt, out, log);
  return cmd_alert(opt, out, log);
}

}  // namespace accident::cli
