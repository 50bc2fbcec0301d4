#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "accident/autodiff.hpp"

namespace accident::layers {

/// y = x W (+ b). Holds pointers into a ParameterSet.
struct Linear {
  ad::Parameter* weight = nullptr;  // in x out
  ad::Parameter* bias = nullptr;    // 1 x out, optional

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
  std::size_t in() const { return weight->value.rows(); }
  std::size_t out() const { return weight->value.cols(); }
};

/// Glorot-uniform weights, zero bias.
Linear make_linear(ad::ParameterSet& params, const std::string& name, const std::string& group,
                   std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng);

/// Stack of Linear layers with tanh between them. If `final_activation` is
/// set the last layer is followed by tanh as well.
struct Mlp {
  std::vector<Linear> layers;
  bool final_activation = false;

  ad::Var operator()(ad::Tape& tape, ad::Var x) const;
};

Mlp make_mlp(ad::ParameterSet& params, const std::string& name, const std::string& group,
             const std::vector<std::size_t>& widths, bool final_activation, std::mt19937_64& rng);

/// Gated recurrent unit (gate order r, z, n) run over a time-major batch.
struct Gru {
  ad::Parameter* w_ih = nullptr;  // I x 3H
  ad::Parameter* b_ih = nullptr;  // 1 x 3H
  ad::Parameter* w_hh = nullptr;  // H x 3H
  ad::Parameter* b_hh = nullptr;  // 1 x 3H

  std::size_t hidden() const { return w_hh->value.rows(); }

  /// x: (T*B) x I with row t*B+b holding sequence b at step t. Returns every
  /// hidden state in the same layout, (T*B) x H. Initial state is zero.
  ad::Var run(ad::Tape& tape, ad::Var x, std::size_t batch) const;
};

Gru make_gru(ad::ParameterSet& params, const std::string& name, const std::string& group,
             std::size_t in, std::size_t hidden, std::mt19937_64& rng);

}  // namespace accident::layers
