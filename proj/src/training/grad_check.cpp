#include "accident/training/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace accident::training {

GradCheckReport grad_check(ad::ParameterSet& params, const Fragment& fragment, double h, double floor) {
  params.zero_grad();
  {
    ad::Tape tape;
    ad::Var loss = fragment(tape);
    tape.backward(loss);
  }
  auto evaluate = [&] {
    ad::Tape tape(false);
    return fragment(tape).scalar();
  };

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    ad::Parameter& param = params[p];
    if (!param.trainable) continue;
    for (std::size_t i = 0; i < param.value.size(); ++i) {
      const double original = param.value[i];
      param.value[i] = original + h;
      const double up = evaluate();
      param.value[i] = original - h;
      const double down = evaluate();
      param.value[i] = original;

      const double numeric = (up - down) / (2.0 * h);
      const double analytic = param.grad.size() == param.value.size() ? param.grad[i] : 0.0;
      const double err = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
      ++report.checked;
      if (err > report.max_rel_error || report.checked == 1) {
        report.max_rel_error = err;
        report.worst_parameter = param.name;
        report.worst_index = i;
        report.analytic = analytic;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace accident::training
