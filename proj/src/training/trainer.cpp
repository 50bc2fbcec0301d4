#include "accident/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "accident/errors.hpp"
#include "accident/synth/generator.hpp"
#include "accident/training/optimizer.hpp"

namespace accident::training {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double metric_or_nan(const std::optional<double>& v) { return v.value_or(kNaN); }

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (plateau_patience < 1) throw ConfigError("plateau_patience must be at least 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw ConfigError("plateau_factor must lie in (0, 1)");
}

metrics::EvalBundle evaluate(const AccidentModel& model, const std::vector<ClipPack>& clips, std::optional<int> n_iter,
                             bool localization) {
  metrics::EvalBundle bundle;
  bundle.clips.reserve(clips.size());
  for (const ClipPack& c : clips) {
    Prediction p = model.predict(to_tensors(c), n_iter, localization);
    metrics::ClipEval e;
    e.clip_id = c.clip_id;
    e.label = c.label;
    e.accident_frame = c.accident_frame;
    e.fps = c.fps;
    e.trace = std::move(p.scores);
    e.localization = std::move(p.localization);
    e.involvement = c.involvement;
    e.mask = c.object_mask;
    bundle.clips.push_back(std::move(e));
  }
  return bundle;
}

std::vector<ClipPack> load_split(const DatasetManifest& manifest, Split split) {
  std::vector<ClipPack> out;
  for (const ManifestEntry& e : manifest.split(split)) out.push_back(read_clip_pack(manifest.resolve(e)));
  return out;
}

TrainHistory train(AccidentModel& model, const std::vector<ClipPack>& train_clips,
                   const std::vector<ClipPack>& val_clips, const TrainConfig& config, const LossConfig& loss,
                   const std::function<void(const EpochRecord&)>& on_epoch) {
  config.validate();
  loss.validate();
  if (train_clips.empty()) throw ConfigError("training split is empty");

  const bool phase1 = loss.phase == 1;
  ad::ParameterSet& params = model.params();
  params.set_trainable("stage1", phase1);
  params.set_trainable("anticipation", phase1);
  params.set_trainable("localization", !phase1);

  std::vector<ClipTensors> tensors;
  tensors.reserve(train_clips.size());
  for (const ClipPack& c : train_clips) tensors.push_back(to_tensors(c));

  Adam adam(params);
  PlateauScheduler plateau(config.plateau_patience, config.plateau_factor);
  double lr = config.learning_rate;
  TrainHistory history;
  history.phase = loss.phase;

  std::vector<std::size_t> order(train_clips.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(synth::derive_seed(config.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double sum_s = 0.0, sum_a = 0.0, sum_m = 0.0;
    std::size_t n_clips = 0, n_loc = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      params.zero_grad();
      // Phase 2 averages only over clips that contribute a localization term.
      std::size_t contributing = end - begin;
      if (!phase1) {
        contributing = 0;
        for (std::size_t i = begin; i < end; ++i) {
          const auto& m = tensors[order[i]].mask;
          contributing += std::any_of(m.begin(), m.end(), [](std::uint8_t v) { return v != 0; }) ? 1 : 0;
        }
        if (contributing == 0) continue;
      }
      for (std::size_t i = begin; i < end; ++i) {
        const std::size_t idx = order[i];
        const ClipPack& clip = train_clips[idx];
        ad::Tape tape;
        ForwardOptions fo;
        fo.training = phase1;
        fo.n_iter = model.config().n_iter_train;
        fo.seed = synth::derive_seed(config.seed, static_cast<std::uint64_t>(epoch), idx);
        fo.anticipation = phase1;
        fo.localization = !phase1;
        ForwardResult r = model.forward(tape, tensors[idx], fo);
        if (phase1) {
          ad::Var ls = score_loss(r.scores, {clip.label, clip.accident_frame}, loss.lambda);
          ad::Var la = anticipation_loss(r.clip, clip.label);
          sum_s += ls.scalar();
          sum_a += la.scalar();
          ++n_clips;
          tape.backward(ad::add(ls, ad::scale(la, loss.eta)), 1.0 / static_cast<double>(end - begin));
        } else {
          auto lm = localization_loss(r.obj_scores, clip.objects, clip.involvement, clip.object_mask);
          if (!lm) continue;
          sum_m += lm->scalar();
          ++n_loc;
          tape.backward(*lm, 1.0 / static_cast<double>(contributing));
        }
      }
      adam.step(lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.loss_score = phase1 ? sum_s / static_cast<double>(n_clips) : kNaN;
    rec.loss_anticipation = phase1 ? sum_a / static_cast<double>(n_clips) : kNaN;
    rec.loss_localization = phase1 ? kNaN : (n_loc == 0 ? kNaN : sum_m / static_cast<double>(n_loc));
    rec.val_ap = rec.val_mtta = rec.val_aola = kNaN;
    if (!val_clips.empty()) {
      metrics::Summary s = metrics::summarize(evaluate(model, val_clips, std::nullopt, !phase1));
      rec.val_ap = metric_or_nan(s.ap);
      rec.val_mtta = metric_or_nan(s.mtta);
      if (!phase1) rec.val_aola = metric_or_nan(s.aola);
    }
    rec.lr_reduced = plateau.observe(phase1 ? rec.val_ap : rec.val_aola, lr);
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  history.lr_reductions = plateau.reductions();
  history.final_lr = lr;
  return history;
}

TrainHistory train(AccidentModel& model, const DatasetManifest& manifest, const TrainConfig& config,
                   const LossConfig& loss, const std::function<void(const EpochRecord&)>& on_epoch) {
  loss.validate();
  if (loss.phase == 2 && !profile_spec(manifest.profile).has_involvement) {
    throw ConfigError("profile '" + std::string(profile_spec(manifest.profile).name) +
                      "' has no object involvement labels; localization training is unavailable");
  }
  std::vector<ClipPack> train_clips = load_split(manifest, Split::train);
  if (train_clips.empty()) throw ConfigError("training split is empty");
  std::vector<ClipPack> val_clips = load_split(manifest, Split::test);
  return train(model, train_clips, val_clips, config, loss, on_epoch);
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,L_S,L_A,L_M,val_AP,val_mTTA,lr\n";
  for (const EpochRecord& r : history.epochs) {
    out += std::to_string(r.epoch) + ',' + fmt(r.loss_score) + ',' + fmt(r.loss_anticipation) + ',' +
           fmt(r.loss_localization) + ',' + fmt(r.val_ap) + ',' + fmt(r.val_mtta) + ',' + fmt(r.lr) + '\n';
  }
  return out;
}

void write_history_csv(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << history_csv(history);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace accident::training
