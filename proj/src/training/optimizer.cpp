#include "accident/training/optimizer.hpp"

#include <cmath>

#include "accident/errors.hpp"

namespace accident::training {

Adam::Adam(ad::ParameterSet& params, AdamConfig config) : params_(&params), config_(config) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& v = params[i].value;
    m_.emplace_back(v.rows(), v.cols());
    v_.emplace_back(v.rows(), v.cols());
  }
}

void Adam::step(double learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (m_.size() != params_->size()) throw ConfigError("parameter set changed after optimizer creation");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_->size(); ++i) {
    ad::Parameter& p = (*params_)[i];
    if (!p.trainable || p.grad.size() != p.value.size()) continue;
    Matrix& m = m_[i];
    Matrix& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g;
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g * g;
      p.value[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
    }
  }
}

PlateauScheduler::PlateauScheduler(int patience, double factor) : patience_(patience), factor_(factor) {
  if (patience < 1) throw ConfigError("plateau patience must be at least 1");
  if (!(factor > 0.0 && factor < 1.0)) throw ConfigError("plateau factor must lie in (0, 1)");
}

bool PlateauScheduler::observe(double metric, double& learning_rate) {
  if (metric > best_) {
    best_ = metric;
    bad_ = 0;
    return false;
  }
  if (++bad_ < patience_) return false;
  bad_ = 0;
  learning_rate *= factor_;
  ++reductions_;
  return true;
}

}  // namespace accident::training
