#pragma once

#include <limits>
#include <vector>

#include "accident/autodiff.hpp"

namespace accident::training {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over the trainable parameters of a set. Frozen parameters are never
/// touched, including their moment buffers.
class Adam {
 public:
  explicit Adam(ad::ParameterSet& params, AdamConfig config = {});
  void step(double learning_rate);
  long steps() const { return t_; }

 private:
  ad::ParameterSet* params_;
  AdamConfig config_;
  std::vector<Matrix> m_, v_;
  long t_ = 0;
};

/// Multiplies the learning rate by `factor` once the monitored metric has
/// failed to improve for `patience` consecutive epochs. Higher is better; NaN
/// never counts as an improvement.
class PlateauScheduler {
 public:
  PlateauScheduler(int patience, double factor);
  /// Returns true when this observation triggered a reduction.
  bool observe(double metric, double& learning_rate);
  int reductions() const { return reductions_; }

 private:
  int patience_;
  double factor_;
  double best_ = -std::numeric_limits<double>::infinity();
  int bad_ = 0;
  int reductions_ = 0;
};

}  // namespace accident::training
