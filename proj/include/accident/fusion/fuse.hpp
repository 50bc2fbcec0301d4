#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "accident/layers.hpp"

namespace accident::fusion {

struct FusionConfig {
  std::size_t vision_dim = 64;  // D_v
  std::size_t object_dim = 32;  // D_r
  std::size_t out_dim = 64;     // D_c
};

/// Masked mean of the object stream over objects, concatenated with the
/// frame stream and passed through a three-layer perceptron.
class Fusion {
 public:
  Fusion() = default;
  Fusion(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
         const FusionConfig& config, std::mt19937_64& rng);

  /// o_v: T x D_v, o_b: (T*N) x D_r, mask: T x N. Returns T x D_c.
  ad::Var operator()(ad::Tape& tape, ad::Var o_v, ad::Var o_b, std::size_t n_objects,
                     const std::vector<std::uint8_t>& mask) const;

  const FusionConfig& config() const { return config_; }
  const layers::Mlp& mlp() const { return mlp_; }

 private:
  FusionConfig config_;
  layers::Mlp mlp_;
};

}  // namespace accident::fusion
