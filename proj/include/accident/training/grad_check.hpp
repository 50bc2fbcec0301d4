#pragma once

#include <functional>
#include <string>

#include "accident/autodiff.hpp"

namespace accident::training {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;  // at the worst entry
  double numeric = 0.0;   // at the worst entry
  std::size_t checked = 0;
};

/// Builds a scalar loss on the given tape from the current parameter values.
using Fragment = std::function<ad::Var(ad::Tape&)>;

/// Central differences against reverse-mode gradients for every scalar of
/// every trainable parameter in `params`. Relative error is
/// |a - n| / max(|a|, |n|, floor). Parameter values are restored afterwards.
GradCheckReport grad_check(ad::ParameterSet& params, const Fragment& fragment, double h = 1e-5,
                           double floor = 1e-6);

}  // namespace accident::training
