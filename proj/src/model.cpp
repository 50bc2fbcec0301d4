#include "accident/model.hpp"

#include <random>

#include "accident/errors.hpp"

namespace accident {

ClipTensors to_tensors(const ClipPack& clip) {
  ClipTensors t;
  t.frames = clip.frames;
  t.objects = clip.objects;
  t.frame_features = Matrix(clip.frames, clip.frame_dim,
                            std::vector<double>(clip.frame_features.begin(), clip.frame_features.end()));
  t.object_features = Matrix(clip.frames * clip.objects, clip.object_dim,
                             std::vector<double>(clip.object_features.begin(), clip.object_features.end()));
  t.mask = clip.object_mask;
  return t;
}

AccidentModel::AccidentModel(const ModelConfig& config)
    : config_(config), params_(std::make_unique<ad::ParameterSet>()) {
  std::mt19937_64 rng(config.init_seed);
  dual_ = fusion::DualVisionAttention(*params_, "dual_vision", "stage1",
                                      {config.frame_dim, config.qk_dim, config.down_factor}, rng);
  fusion::RoutingConfig rc;
  rc.object_dim = config.object_dim;
  rc.out_dim = config.routing_dim;
  rc.down_factor = config.down_factor;
  rc.n_iter = config.n_iter_train;
  rc.dropout = config.dropout;
  rc.noise = config.noise;
  routing_ = fusion::DynamicObjectAttention(*params_, "routing", "stage1", rc, rng);
  fusion_ = fusion::Fusion(*params_, "fusion", "stage1", {config.frame_dim, config.routing_dim, config.fused_dim},
                           rng);

  heads::AnticipationConfig ac;
  ac.in_dim = config.fused_dim;
  ac.hidden = config.anticipation_hidden;
  ac.mlp_dim = config.anticipation_mlp;
  ac.channels = config.branch_channels;
  ac.branch_kernels = config.branch_kernels;
  anticipation_ = heads::AnticipationHead(*params_, "anticipation", "anticipation", ac, rng);

  heads::LocalizationConfig lc;
  lc.vision_dim = config.frame_dim;
  lc.object_dim = config.routing_dim;
  lc.fused_dim = config.fused_dim;
  lc.proj_hidden = config.proj_hidden;
  lc.d_k = config.d_k;
  lc.hidden = config.localization_hidden;
  lc.top_k = config.top_k;
  localization_ = heads::LocalizationHead(*params_, "localization", "localization", lc, rng);
}

ForwardResult AccidentModel::forward(ad::Tape& tape, const ClipTensors& clip, const ForwardOptions& options) const {
  if (clip.frame_features.cols() != config_.frame_dim || clip.object_features.cols() != config_.object_dim) {
    throw ShapeError("clip feature widths do not match the model");
  }
  ForwardResult r;
  r.o_v = dual_(tape, tape.constant(clip.frame_features));
  fusion::RoutingOptions ro;
  ro.n_iter = options.n_iter;
  ro.training = options.training;
  ro.noise = config_.noise;
  ro.dropout = config_.dropout;
  ro.seed = options.seed;
  r.o_b = routing_(tape, tape.constant(clip.object_features), clip.objects, clip.mask, ro, &r.routing);
  r.o_c = fusion_(tape, r.o_v, r.o_b, clip.objects, clip.mask);
  if (options.anticipation) {
    heads::AnticipationHead::Output a = anticipation_(tape, r.o_c);
    r.scores = a.scores;
    r.clip = a.clip;
  }
  if (options.localization) {
    heads::LocalizationHead::Output l = localization_(tape, r.o_v, r.o_b, r.o_c, clip.objects, clip.mask);
    r.attention = l.attention;
    r.obj_scores = l.scores;
  }
  return r;
}

Prediction AccidentModel::predict(const ClipTensors& clip, std::optional<int> n_iter, bool localization) const {
  ad::Tape tape(false);
  ForwardOptions o;
  o.training = false;
  o.n_iter = n_iter.value_or(config_.n_iter_test);
  o.localization = localization;
  ForwardResult r = forward(tape, clip, o);
  Prediction p;
  p.scores = heads::to_trace({r.scores, r.clip});
  if (localization) {
    p.localization = heads::make_localization_trace(clip.frames, clip.objects, r.obj_scores.value().values(),
                                                    clip.mask, config_.top_k);
  }
  return p;
}

}  // namespace accident
