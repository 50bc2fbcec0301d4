#include "accident/heads/anticipation.hpp"

#include <algorithm>
#include <cmath>

#include "accident/errors.hpp"

namespace accident::heads {

AnticipationHead::AnticipationHead(ad::ParameterSet& params, const std::string& prefix,
                                   const std::string& group, const AnticipationConfig& config,
                                   std::mt19937_64& rng)
    : config_(config) {
  if (config.branch_kernels.empty()) throw ConfigError("anticipation head: no conv branches");
  for (std::size_t k : config.branch_kernels) {
    if (k == 0) throw ConfigError("anticipation head: kernel width must be positive");
  }
  gru_ = layers::make_gru(params, prefix + ".gru", group, config.in_dim, config.hidden, rng);
  mlp_ = layers::make_mlp(params, prefix + ".mlp", group, {config.hidden, config.mlp_dim, config.mlp_dim}, true,
                          rng);
  for (std::size_t i = 0; i < config.branch_kernels.size(); ++i) {
    const std::size_t k = config.branch_kernels[i];
    const std::string name = prefix + ".branch" + std::to_string(i);
    layers::Linear conv =
        layers::make_linear(params, name + ".conv", group, k * config.mlp_dim, config.channels, true, rng);
    layers::Linear deconv =
        layers::make_linear(params, name + ".deconv", group, k * config.channels, config.channels, true, rng);
    branches_.push_back({k, conv.weight, conv.bias, deconv.weight, deconv.bias});
  }
  score_ = layers::make_linear(params, prefix + ".score", group, config.channels, 1, true, rng);
  clip_ = layers::make_linear(params, prefix + ".clip", group, config.hidden, 1, true, rng);
}

AnticipationHead::Output AnticipationHead::operator()(ad::Tape& tape, ad::Var o_c) const {
  if (o_c.cols() != config_.in_dim) throw ShapeError("anticipation head: input width mismatch");
  const std::size_t frames = o_c.rows();
  const std::size_t widest = *std::max_element(config_.branch_kernels.begin(), config_.branch_kernels.end());
  if (frames < widest) throw ConfigError("anticipation head: clip shorter than the widest kernel");

  ad::Var states = gru_.run(tape, o_c, 1);
  ad::Var m = mlp_(tape, states);
  ad::Var merged;
  for (const ConvBranch& b : branches_) {
    ad::Var y = ad::tanh(ad::causal_conv1d(m, tape.param(*b.conv_w), tape.param(*b.conv_b)));
    y = ad::causal_conv1d(y, tape.param(*b.deconv_w), tape.param(*b.deconv_b));
    merged = merged.valid() ? ad::add(merged, y) : y;
  }
  Output out;
  out.scores = ad::sigmoid(score_(tape, merged));
  out.clip = ad::sigmoid(clip_(tape, ad::slice_rows(states, frames - 1, 1)));
  return out;
}

ScoreTrace to_trace(const AnticipationHead::Output& out) {
  ScoreTrace t;
  t.s = out.scores.value().values();
  t.l_a = out.clip.scalar();
  return t;
}

}  // namespace accident::heads
