#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "accident/layers.hpp"

namespace accident::heads {

/// Per-object involvement scores (T x N, row-major) with the derived
/// involvement flags and per-frame top-k lists.
struct LocalizationTrace {
  std::size_t frames = 0;
  std::size_t objects = 0;
  std::vector<double> obj_scores;
  std::vector<std::uint8_t> involved;
  std::vector<std::vector<std::size_t>> topk;

  double score(std::size_t t, std::size_t n) const { return obj_scores[t * objects + n]; }
};

/// Indices of the k highest scores among unmasked slots, descending, ties by
/// ascending index. An empty mask means every slot is occupied.
std::vector<std::size_t> top_k(std::span<const double> scores, std::span<const std::uint8_t> mask, std::size_t k);

/// Involved means strictly above 0.5 and unmasked.
LocalizationTrace make_localization_trace(std::size_t frames, std::size_t objects, std::vector<double> scores,
                                          const std::vector<std::uint8_t>& mask, std::size_t k);

struct LocalizationConfig {
  std::size_t vision_dim = 64;  // D_v
  std::size_t object_dim = 32;  // D_r
  std::size_t fused_dim = 64;   // D_c
  std::size_t proj_hidden = 32;
  std::size_t d_k = 16;
  std::size_t hidden = 16;  // recurrent refiner width
  std::size_t top_k = 3;
};

/// Frame-to-object attention with normalised projections, a GRU refiner run
/// over every occupied object in one packed batch, and a sigmoid per object.
class LocalizationHead {
 public:
  struct Output {
    ad::Var attention;  // T x N
    ad::Var scores;     // (T*N) x 1, row t*N+n
  };

  LocalizationHead() = default;
  LocalizationHead(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
                   const LocalizationConfig& config, std::mt19937_64& rng);

  Output operator()(ad::Tape& tape, ad::Var o_v, ad::Var o_b, ad::Var o_c, std::size_t n_objects,
                    const std::vector<std::uint8_t>& mask) const;

  const LocalizationConfig& config() const { return config_; }
  const layers::Linear& object_head() const { return head_; }

 private:
  LocalizationConfig config_;
  layers::Mlp mlp_q_, mlp_k_, mlp_v_;
  layers::Linear wq_, wk_, wv_;
  layers::Gru gru_;
  layers::Linear head_;
};

}  // namespace accident::heads
