// SPDX-License-Identifier: Apache-2.0
//
// Recurrent cells, linear heads, dropout and cross entropy built on the
// autodiff core. Cells only hold parameter ids; values live in a ParamSet and
// are bound per pass through a Scope.
//
// Gate conventions (row-vector form, x: [in], h: [d], W: [in x d], U: [d x d]):
//
//   GRU   z  = sigmoid(x W_z + h U_z + b_z)
//         r  = sigmoid(x W_r + h U_r + b_r)
//         h~ = tanh(x W_h + (r * h) U_h + b_h)
//         h' = (1 - z) * h + z * h~
//
//   LSTM  i  = sigmoid(x W_i + h U_i + b_i)
//         f  = sigmoid(x W_f + h U_f + b_f)
//         o  = sigmoid(x W_o + h U_o + b_o)
//         g  = tanh(x W_g + h U_g + b_g)
//         c' = f * c + i * g
//         h' = o * tanh(c')

#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "srl/params.hpp"
#include "srl/tensor.hpp"

namespace srl {

struct GruCell {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  ParamId W_z{}, W_r{}, W_h{};
  ParamId U_z{}, U_r{}, U_h{};
  ParamId b_z{}, b_r{}, b_h{};

  static GruCell create(ParamSet& params, const std::string& prefix, std::size_t input_dim,
                        std::size_t hidden_dim);
};

struct LstmCell {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  ParamId W_i{}, W_f{}, W_o{}, W_g{};
  ParamId U_i{}, U_f{}, U_o{}, U_g{};
  ParamId b_i{}, b_f{}, b_o{}, b_g{};

  static LstmCell create(ParamSet& params, const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim);
};

struct LinearHead {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  ParamId W{}, b{};

  static LinearHead create(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                           std::size_t out_dim);
};

struct LstmState {
  Tensor h;
  Tensor c;
};

Tensor gru_step(Scope& scope, const GruCell& cell, const Tensor& x, const Tensor& h_prev);
LstmState lstm_step(Scope& scope, const LstmCell& cell, const Tensor& x, const Tensor& h_prev,
                    const Tensor& c_prev);
Tensor linear(Scope& scope, const LinearHead& head, const Tensor& x);

/// Inverted dropout. Identity when !training or ratio == 0 (the input handle
/// itself is returned, so eval mode is bitwise exact).
Tensor dropout(const Tensor& x, double ratio, bool training, std::mt19937_64& rng);

inline constexpr double kLogClamp = 1e-12;

/// -log(max(probs[label], 1e-12)).
Tensor cross_entropy(const Tensor& probs, std::size_t label);

}  // namespace srl
