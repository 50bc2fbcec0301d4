#include "accident/layers.hpp"

#include <cmath>

#include "accident/errors.hpp"

namespace accident::layers {

ad::Var Linear::operator()(ad::Tape& tape, ad::Var x) const {
  ad::Var y = ad::matmul(x, tape.param(*weight));
  return bias != nullptr ? ad::add_row(y, tape.param(*bias)) : y;
}

Linear make_linear(ad::ParameterSet& params, const std::string& name, const std::string& group,
                   std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Matrix w(in, out);
  for (double& v : w.values()) v = u(rng);
  Linear l;
  l.weight = &params.add(name + ".weight", group, std::move(w));
  if (with_bias) l.bias = &params.add(name + ".bias", group, Matrix(1, out));
  return l;
}

ad::Var Mlp::operator()(ad::Tape& tape, ad::Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](tape, x);
    if (i + 1 < layers.size() || final_activation) x = ad::tanh(x);
  }
  return x;
}

Mlp make_mlp(ad::ParameterSet& params, const std::string& name, const std::string& group,
             const std::vector<std::size_t>& widths, bool final_activation, std::mt19937_64& rng) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  Mlp m;
  m.final_activation = final_activation;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    m.layers.push_back(
        make_linear(params, name + "." + std::to_string(i), group, widths[i], widths[i + 1], true, rng));
  }
  return m;
}

ad::Var Gru::run(ad::Tape& tape, ad::Var x, std::size_t batch) const {
  const std::size_t h = hidden();
  if (batch == 0 || x.rows() % batch != 0) throw ShapeError("gru: rows must be a multiple of the batch");
  const std::size_t steps = x.rows() / batch;
  ad::Var xp = ad::add_row(ad::matmul(x, tape.param(*w_ih)), tape.param(*b_ih));
  ad::Var whh = tape.param(*w_hh);
  ad::Var bhh = tape.param(*b_hh);
  ad::Var state = tape.constant(Matrix(batch, h));
  std::vector<ad::Var> states;
  states.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    state = ad::gru_step(ad::slice_rows(xp, t * batch, batch), state, whh, bhh);
    states.push_back(state);
  }
  return ad::stack_rows(states);
}

Gru make_gru(ad::ParameterSet& params, const std::string& name, const std::string& group,
             std::size_t in, std::size_t hidden, std::mt19937_64& rng) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u(-limit, limit);
  auto init = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.values()) v = u(rng);
    return m;
  };
  Gru g;
  g.w_ih = &params.add(name + ".w_ih", group, init(in, 3 * hidden));
  g.b_ih = &params.add(name + ".b_ih", group, init(1, 3 * hidden));
  g.w_hh = &params.add(name + ".w_hh", group, init(hidden, 3 * hidden));
  g.b_hh = &params.add(name + ".b_hh", group, init(1, 3 * hidden));
  return g;
}

}  // namespace accident::layers
