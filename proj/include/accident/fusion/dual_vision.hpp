#pragma once

#include <random>
#include <string>

#include "accident/autodiff.hpp"

namespace accident::fusion {

struct DualVisionConfig {
  std::size_t dim = 64;         // D_v
  std::size_t qk_dim = 16;      // width of the query/key projections
  std::size_t down_factor = 2;  // temporal pooling factor before position attention
};

/// Position attention over time plus projection-free channel attention, each
/// with its own residual, summed:
///   F_P = gamma * up(softmax(Q K^T) V) + O_V   with Q,K,V from down(O_V)
///   F_C = beta  * softmax(O_V O_V^T) O_V + O_V
///   out = F_P + F_C
class DualVisionAttention {
 public:
  DualVisionAttention() = default;
  DualVisionAttention(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
                      const DualVisionConfig& config, std::mt19937_64& rng);

  /// o_v: T x D_v. Raises NumericError on non-finite input and ConfigError
  /// when T < down_factor.
  ad::Var operator()(ad::Tape& tape, ad::Var o_v) const;

  const DualVisionConfig& config() const { return config_; }
  ad::Parameter& gamma() const { return *gamma_; }
  ad::Parameter& beta() const { return *beta_; }
  ad::Parameter& q_proj() const { return *wq_; }
  ad::Parameter& k_proj() const { return *wk_; }
  ad::Parameter& v_proj() const { return *wv_; }

 private:
  DualVisionConfig config_;
  ad::Parameter* gamma_ = nullptr;
  ad::Parameter* beta_ = nullptr;
  ad::Parameter* wq_ = nullptr;
  ad::Parameter* wk_ = nullptr;
  ad::Parameter* wv_ = nullptr;
};

}  // namespace accident::fusion
