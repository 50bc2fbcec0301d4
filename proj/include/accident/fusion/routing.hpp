#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "accident/autodiff.hpp"

namespace accident::fusion {

enum class NoiseMode { none, same, different, linear, markov };

std::string_view to_string(NoiseMode mode);
/// Raises ConfigError for unknown names.
NoiseMode parse_noise_mode(std::string_view name);

/// beta_n = linspace(0.1/n_iter, 20/n_iter, n_iter) clamped to [1e-6, 0.999].
std::vector<double> noise_betas(int n_iter);
/// alpha_n = 1 - beta_n. The mode does not change the values.
std::vector<double> noise_schedule(int n_iter, NoiseMode mode = NoiseMode::markov);
/// Running products of the schedule.
std::vector<double> alpha_bar(const std::vector<double>& alphas);

/// One noise update with an explicit standard-normal draw `eps`.
///   markov:    sqrt(a) * prev + sqrt(1 - a) * eps
///   linear:    a * prev + (1 - a) * eps
///   same/different: eps
///   none:      zeros
Matrix diffuse_noise_step(const Matrix& prev, double alpha, const Matrix& eps, NoiseMode mode);

/// Stateful noise source drawing eps from its own generator. In `same` mode
/// the first draw is reused for every later step.
class DiffuseNoise {
 public:
  DiffuseNoise(NoiseMode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}
  Matrix step(const Matrix& prev, double alpha);
  NoiseMode mode() const { return mode_; }

 private:
  NoiseMode mode_;
  std::mt19937_64 rng_;
  std::optional<Matrix> fixed_;
};

/// squash(x) = (|x|^2 / (1 + |x|^2)) * x / |x| on a plain vector; squash(0) = 0.
std::vector<double> squash(const std::vector<double>& x);

struct RoutingConfig {
  std::size_t object_dim = 32;  // D_o
  std::size_t out_dim = 32;     // D_r
  std::size_t down_factor = 2;  // latent width is out_dim / down_factor
  int n_iter = 6;
  double dropout = 0.1;
  NoiseMode noise = NoiseMode::markov;
};

struct RoutingOptions {
  int n_iter = 6;
  bool training = false;
  NoiseMode noise = NoiseMode::markov;  // ignored unless training
  double dropout = 0.0;                 // ignored unless training
  std::uint64_t seed = 0;
  /// Initial routing logits ((T*N) x latent width); zeros when absent.
  std::optional<Matrix> initial_weights;
};

/// Inspection record of one routing pass.
struct RoutingState {
  Matrix weights;  // W_B after the last iteration
  Matrix noise;    // D after the last iteration
  std::vector<double> alpha_schedule;
  std::vector<double> alpha_bar;
  int n_iter = 0;
  double dropout_rate = 0.0;
};

/// Chain routing over object features:
///   F = V_B W;  W_B <- W_B + S * squash(S * dropout(F)) + D,  S = softmax_N(W_B)
/// followed by the up-projection back to out_dim when down_factor > 1.
class DynamicObjectAttention {
 public:
  DynamicObjectAttention() = default;
  DynamicObjectAttention(ad::ParameterSet& params, const std::string& prefix, const std::string& group,
                         const RoutingConfig& config, std::mt19937_64& rng);

  /// v_b: (T*N) x D_o, mask: T x N. Returns (T*N) x D_r.
  ad::Var operator()(ad::Tape& tape, ad::Var v_b, std::size_t n_objects,
                     const std::vector<std::uint8_t>& mask, const RoutingOptions& options,
                     RoutingState* state = nullptr) const;

  const RoutingConfig& config() const { return config_; }
  std::size_t latent_dim() const { return latent_; }
  ad::Parameter& transform() const { return *w_; }
  ad::Parameter* up_projection() const { return up_; }

 private:
  RoutingConfig config_;
  std::size_t latent_ = 0;
  ad::Parameter* w_ = nullptr;
  ad::Parameter* up_ = nullptr;
};

}  // namespace accident::fusion
