#include "accident/heads/localization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "accident/errors.hpp"

namespace accident::heads {

std::vector<std::size_t> top_k(std::span<const double> scores, std::span<const std::uint8_t> mask, std::size_t k) {
  if (!mask.empty() && mask.size() != scores.size()) throw ShapeError("top_k: mask size mismatch");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (mask.empty() || mask[i] != 0) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (idx.size() > k) idx.resize(k);
  return idx;
}

LocalizationTrace make_localization_trace(std::size_t frames, std::size_t objects, std::vector<double> scores,
                                          const std::vector<std::uint8_t>& mask, std::size_t k) {
  if (scores.size() != frames * objects || mask.size() != frames * objects) {
    throw ShapeError("localization trace: shape mismatch");
  }
  LocalizationTrace tr;
  tr.frames = frames;
  tr.objects = objects;
  tr.obj_scores = std::move(scores);
  tr.involved.assign(frames * objects, 0);
  tr.topk.resize(frames);
  for (std::size_t i = 0; i < tr.obj_scores.size(); ++i) {
    tr.involved[i] = mask[i] != 0 && tr.obj_scores[i] > 0.5 ? 1 : 0;
  }
  for (std::size_t t = 0; t < frames; ++t) {
    tr.topk[t] = top_k(std::span<const double>(tr.obj_scores).subspan(t * objects, objects),
                       std::span<const std::uint8_t>(mask).subspan(t * objects, objects), k);
  }
  return tr;
}

LocalizationHead::LocalizationHead(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
                                   const LocalizationConfig& config, std::mt19937_64& rng)
    : config_(config) {
  if (config.d_k == 0) throw ConfigError("localization head: d_k must be positive");
  const std::size_t h = config.proj_hidden;
  mlp_q_ = layers::make_mlp(params, prefix + ".mlp_q", group, {config.vision_dim, h, h}, true, rng);
  mlp_k_ = layers::make_mlp(params, prefix + ".mlp_k", group, {config.object_dim, h, h}, true, rng);
  mlp_v_ = layers::make_mlp(params, prefix + ".mlp_v", group, {config.fused_dim, h, h}, true, rng);
  wq_ = layers::make_linear(params, prefix + ".wq", group, h, config.d_k, false, rng);
  wk_ = layers::make_linear(params, prefix + ".wk", group, h, config.d_k, false, rng);
  wv_ = layers::make_linear(params, prefix + ".wv", group, h, config.d_k, false, rng);
  gru_ = layers::make_gru(params, prefix + ".gru", group, config.d_k, config.hidden, rng);
  head_ = layers::make_linear(params, prefix + ".object", group, config.hidden, 1, true, rng);
}

LocalizationHead::Output LocalizationHead::operator()(ad::Tape& tape, ad::Var o_v, ad::Var o_b, ad::Var o_c,
                                                      std::size_t n_objects,
                                                      const std::vector<std::uint8_t>& mask) const {
  const std::size_t frames = o_v.rows();
  if (n_objects == 0 || o_b.rows() != frames * n_objects || o_c.rows() != frames) {
    throw ShapeError("localization head: stream shapes disagree");
  }
  if (mask.size() != frames * n_objects) throw ShapeError("localization head: mask must be T x N");

  ad::Var q = ad::l2_normalize_rows(wq_(tape, mlp_q_(tape, o_v)));
  ad::Var k = ad::l2_normalize_rows(wk_(tape, mlp_k_(tape, o_b)));
  ad::Var v = ad::l2_normalize_rows(wv_(tape, mlp_v_(tape, o_c)));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.d_k));
  ad::Var attn = ad::softmax_rows(ad::frame_object_logits(q, k, n_objects, scale), mask);
  ad::Var f = ad::weight_rows(attn, v);

  // Pack every slot that is occupied somewhere in the clip into one batch.
  std::vector<std::size_t> slots;
  for (std::size_t n = 0; n < n_objects; ++n) {
    for (std::size_t t = 0; t < frames; ++t) {
      if (mask[t * n_objects + n] != 0) {
        slots.push_back(n);
        break;
      }
    }
  }
  Output out;
  out.attention = attn;
  if (slots.empty()) {
    out.scores = ad::sigmoid(tape.constant(Matrix(frames * n_objects, 1)));
    return out;
  }
  std::vector<std::size_t> index;
  index.reserve(frames * slots.size());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t n : slots) index.push_back(t * n_objects + n);
  }
  ad::Var packed = ad::gather_rows(f, index);
  ad::Var refined = gru_.run(tape, packed, slots.size());
  ad::Var logits = ad::scatter_rows(head_(tape, refined), index, frames * n_objects);
  out.scores = ad::sigmoid(logits);
  return out;
}

}  // namespace accident::heads
