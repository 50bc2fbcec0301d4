#include "accident/fusion/dual_vision.hpp"

#include <cmath>

#include "accident/errors.hpp"

namespace accident::fusion {

namespace {

Matrix glorot(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix m(in, out);
  for (double& v : m.values()) v = u(rng);
  return m;
}

}  // namespace

DualVisionAttention::DualVisionAttention(ad::ParameterSet& params, const std::string& prefix,
                                         const std::string& group, const DualVisionConfig& config,
                                         std::mt19937_64& rng)
    : config_(config) {
  if (config.dim == 0 || config.qk_dim == 0) throw ConfigError("dual vision attention: zero width");
  if (config.down_factor == 0) throw ConfigError("dual vision attention: down_factor must be positive");
  gamma_ = &params.add(prefix + ".gamma", group, Matrix(1, 1));
  beta_ = &params.add(prefix + ".beta", group, Matrix(1, 1));
  wq_ = &params.add(prefix + ".q_proj", group, glorot(config.dim, config.qk_dim, rng));
  wk_ = &params.add(prefix + ".k_proj", group, glorot(config.dim, config.qk_dim, rng));
  wv_ = &params.add(prefix + ".v_proj", group, glorot(config.dim, config.dim, rng));
}

ad::Var DualVisionAttention::operator()(ad::Tape& tape, ad::Var o_v) const {
  const Matrix& x = o_v.value();
  if (x.cols() != config_.dim) throw ShapeError("dual vision attention: feature width mismatch");
  if (!x.all_finite()) throw NumericError("dual vision attention: non-finite input");
  const std::size_t frames = x.rows();
  if (frames < config_.down_factor) {
    throw ConfigError("dual vision attention: clip shorter than down_factor");
  }

  const std::size_t f = config_.down_factor;
  ad::Var z = f > 1 ? ad::pool_rows(o_v, f) : o_v;
  ad::Var q = ad::matmul(z, tape.param(*wq_));
  ad::Var k = ad::matmul(z, tape.param(*wk_));
  ad::Var v = ad::matmul(z, tape.param(*wv_));
  ad::Var pos = ad::matmul(ad::softmax_rows(ad::matmul_nt(q, k)), v);
  if (f > 1) pos = ad::repeat_rows(pos, f, frames);
  ad::Var f_p = ad::add(ad::scale_by(pos, tape.param(*gamma_)), o_v);

  ad::Var chan = ad::matmul(ad::softmax_rows(ad::matmul_nt(o_v, o_v)), o_v);
  ad::Var f_c = ad::add(ad::scale_by(chan, tape.param(*beta_)), o_v);
  return ad::add(f_p, f_c);
}

}  // namespace accident::fusion
