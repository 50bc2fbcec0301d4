#include "accident/fusion/routing.hpp"

#include <algorithm>
#include <cmath>

#include "accident/errors.hpp"

namespace accident::fusion {

std::string_view to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::none: return "none";
    case NoiseMode::same: return "same";
    case NoiseMode::different: return "different";
    case NoiseMode::linear: return "linear";
    case NoiseMode::markov: return "markov";
  }
  return "none";
}

NoiseMode parse_noise_mode(std::string_view name) {
  for (NoiseMode m : {NoiseMode::none, NoiseMode::same, NoiseMode::different, NoiseMode::linear,
                      NoiseMode::markov}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown noise mode '" + std::string(name) + "'");
}

std::vector<double> noise_betas(int n_iter) {
  if (n_iter < 1) throw ConfigError("noise schedule needs at least one iteration");
  const double n = static_cast<double>(n_iter);
  const double lo = 0.1 / n;
  const double hi = 20.0 / n;
  std::vector<double> betas(static_cast<std::size_t>(n_iter));
  for (int i = 0; i < n_iter; ++i) {
    const double b = n_iter == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (n - 1.0);
    betas[static_cast<std::size_t>(i)] = std::clamp(b, 1e-6, 0.999);
  }
  if (n_iter > 1) betas.back() = std::clamp(hi, 1e-6, 0.999);
  return betas;
}

std::vector<double> noise_schedule(int n_iter, NoiseMode /*mode*/) {
  std::vector<double> alphas = noise_betas(n_iter);
  for (double& a : alphas) a = 1.0 - a;
  return alphas;
}

std::vector<double> alpha_bar(const std::vector<double>& alphas) {
  std::vector<double> out(alphas.size());
  double acc = 1.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) out[i] = acc *= alphas[i];
  return out;
}

Matrix diffuse_noise_step(const Matrix& prev, double alpha, const Matrix& eps, NoiseMode mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw NumericError("noise step: alpha must lie in (0, 1)");
  if (!prev.same_shape(eps)) throw ShapeError("noise step: shape mismatch");
  Matrix out(prev.rows(), prev.cols());
  switch (mode) {
    case NoiseMode::none:
      break;
    case NoiseMode::same:
    case NoiseMode::different:
      out = eps;
      break;
    case NoiseMode::linear:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha * prev[i] + (1.0 - alpha) * eps[i];
      break;
    case NoiseMode::markov: {
      const double a = std::sqrt(alpha);
      const double b = std::sqrt(1.0 - alpha);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * prev[i] + b * eps[i];
      break;
    }
  }
  return out;
}

Matrix DiffuseNoise::step(const Matrix& prev, double alpha) {
  if (mode_ == NoiseMode::none) return diffuse_noise_step(prev, alpha, Matrix(prev.rows(), prev.cols()), mode_);
  if (mode_ == NoiseMode::same && fixed_ && fixed_->same_shape(prev)) {
    return diffuse_noise_step(prev, alpha, *fixed_, mode_);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix eps(prev.rows(), prev.cols());
  for (double& v : eps.values()) v = normal(rng_);
  if (mode_ == NoiseMode::same) fixed_ = eps;
  return diffuse_noise_step(prev, alpha, eps, mode_);
}

std::vector<double> squash(const std::vector<double>& x) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  std::vector<double> out(x.size(), 0.0);
  if (sq == 0.0) return out;
  const double f = sq / (1.0 + sq) / std::sqrt(sq);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i];
  return out;
}

DynamicObjectAttention::DynamicObjectAttention(ad::ParameterSet& params, const std::string& prefix,
                                               const std::string& group, const RoutingConfig& config,
                                               std::mt19937_64& rng)
    : config_(config) {
  if (config.object_dim == 0 || config.out_dim == 0) throw ConfigError("routing: zero width");
  if (config.down_factor == 0) throw ConfigError("routing: down_factor must be positive");
  if (config.n_iter < 0) throw ConfigError("routing: n_iter must be non-negative");
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) throw ConfigError("routing: dropout must lie in [0, 1)");
  latent_ = std::max<std::size_t>(1, config.out_dim / config.down_factor);
  auto glorot = [&](std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(in, out);
    for (double& v : m.values()) v = u(rng);
    return m;
  };
  w_ = &params.add(prefix + ".transform", group, glorot(config.object_dim, latent_));
  if (config.down_factor > 1) {
    up_ = &params.add(prefix + ".up_proj", group, glorot(latent_, config.out_dim));
  }
}

ad::Var DynamicObjectAttention::operator()(ad::Tape& tape, ad::Var v_b, std::size_t n_objects,
                                           const std::vector<std::uint8_t>& mask,
                                           const RoutingOptions& options, RoutingState* state) const {
  const Matrix& x = v_b.value();
  if (x.cols() != config_.object_dim) throw ShapeError("routing: object feature width mismatch");
  if (n_objects == 0 || x.rows() % n_objects != 0) throw ShapeError("routing: rows must be T * N");
  if (mask.size() != x.rows()) throw ShapeError("routing: mask must be T x N");
  if (!x.all_finite()) throw NumericError("routing: non-finite input");
  if (options.n_iter < 0) throw ConfigError("routing: n_iter must be non-negative");

  ad::Var f = ad::matmul(v_b, tape.param(*w_));
  Matrix w0 = options.initial_weights.value_or(Matrix(x.rows(), latent_));
  if (w0.rows() != x.rows() || w0.cols() != latent_) {
    throw ConfigError("routing: initial weights do not match the embedded features");
  }
  ad::Var w_b = tape.constant(std::move(w0));

  const bool noisy = options.training && options.noise != NoiseMode::none;
  const bool drop = options.training && options.dropout > 0.0;
  std::vector<double> alphas = options.n_iter > 0 ? noise_schedule(options.n_iter, options.noise)
                                                  : std::vector<double>{};
  std::mt19937_64 drop_rng(options.seed ^ 0xd1b54a32d192ed03ULL);
  DiffuseNoise noise(noisy ? options.noise : NoiseMode::none, options.seed);
  Matrix d(x.rows(), latent_);

  for (int n = 0; n < options.n_iter; ++n) {
    ad::Var s = ad::softmax_objects(w_b, n_objects, mask);
    ad::Var fin = f;
    if (drop) {
      std::bernoulli_distribution keep(1.0 - options.dropout);
      Matrix m(x.rows(), latent_);
      const double inv = 1.0 / (1.0 - options.dropout);
      for (double& v : m.values()) v = keep(drop_rng) ? inv : 0.0;
      fin = ad::mul(f, tape.constant(std::move(m)));
    }
    ad::Var h = ad::mul(s, fin);
    ad::Var delta = ad::mul(s, ad::squash_rows(h));
    if (noisy) {
      d = noise.step(d, alphas[static_cast<std::size_t>(n)]);
      delta = ad::add(delta, tape.constant(d));
    }
    w_b = ad::add(w_b, delta);
  }

  if (state != nullptr) {
    state->weights = w_b.value();
    state->noise = d;
    state->alpha_schedule = alphas;
    state->alpha_bar = alpha_bar(alphas);
    state->n_iter = options.n_iter;
    state->dropout_rate = options.training ? options.dropout : 0.0;
  }
  return up_ != nullptr ? ad::matmul(w_b, tape.param(*up_)) : w_b;
}

}  // namespace accident::fusion
