#pragma once

#include <random>
#include <string>
#include <vector>

#include "accident/layers.hpp"

namespace accident::heads {

/// Per-frame accident probabilities plus the clip-level probability.
struct ScoreTrace {
  std::vector<double> s;
  double l_a = 0.0;
};

struct AnticipationConfig {
  std::size_t in_dim = 64;        // D_c
  std::size_t hidden = 32;        // recurrent state width
  std::size_t mlp_dim = 32;       // width after the perceptron
  std::size_t channels = 16;      // conv branch channels
  std::vector<std::size_t> branch_kernels{3, 5, 7};
};

struct ConvBranch {
  std::size_t kernel = 0;
  ad::Parameter* conv_w = nullptr;
  ad::Parameter* conv_b = nullptr;
  ad::Parameter* deconv_w = nullptr;
  ad::Parameter* deconv_b = nullptr;
};

/// GRU over time, perceptron, summed causal conv-deconv branches and a
/// sigmoid score per frame. The clip probability reads the final GRU state.
class AnticipationHead {
 public:
  struct Output {
    ad::Var scores;  // T x 1
    ad::Var clip;    // 1 x 1
  };

  AnticipationHead() = default;
  AnticipationHead(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
                   const AnticipationConfig& config, std::mt19937_64& rng);

  /// o_c: T x D_c. Raises ConfigError when T is shorter than the widest kernel.
  Output operator()(ad::Tape& tape, ad::Var o_c) const;

  const AnticipationConfig& config() const { return config_; }
  const layers::Linear& score_head() const { return score_; }
  const layers::Linear& clip_head() const { return clip_; }

 private:
  AnticipationConfig config_;
  layers::Gru gru_;
  layers::Mlp mlp_;
  std::vector<ConvBranch> branches_;
  layers::Linear score_;
  layers::Linear clip_;
};

ScoreTrace to_trace(const AnticipationHead::Output& out);

}  // namespace accident::heads
