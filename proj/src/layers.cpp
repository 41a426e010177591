// SPDX-License-Identifier: Apache-2.0

#include "srl/layers.hpp"

#include "srl/errors.hpp"

namespace srl {

namespace {

void expect_len(const char* what, const Tensor& t, std::size_t n) {
  if (t.rank() != 1 || t.size() != n) {
    throw DimensionError(std::string(what) + ": expected [" + std::to_string(n) + "], got " +
                         shape_str(t.shape()));
  }
}

// x W + h U + b
Tensor gate_preact(Scope& s, const Tensor& x, ParamId W, const Tensor& h, ParamId U, ParamId b) {
  return add(add(matmul(x, s.param(W)), matmul(h, s.param(U))), s.param(b));
}

}  // namespace

GruCell GruCell::create(ParamSet& params, const std::string& prefix, std::size_t input_dim,
                        std::size_t hidden_dim) {
  GruCell c;
  c.input_dim = input_dim;
  c.hidden_dim = hidden_dim;
  c.W_z = params.add(prefix + ".W_z", {input_dim, hidden_dim});
  c.W_r = params.add(prefix + ".W_r", {input_dim, hidden_dim});
  c.W_h = params.add(prefix + ".W_h", {input_dim, hidden_dim});
  c.U_z = params.add(prefix + ".U_z", {hidden_dim, hidden_dim});
  c.U_r = params.add(prefix + ".U_r", {hidden_dim, hidden_dim});
  c.U_h = params.add(prefix + ".U_h", {hidden_dim, hidden_dim});
  c.b_z = params.add(prefix + ".b_z", {hidden_dim});
  c.b_r = params.add(prefix + ".b_r", {hidden_dim});
  c.b_h = params.add(prefix + ".b_h", {hidden_dim});
  return c;
}

LstmCell LstmCell::create(ParamSet& params, const std::string& prefix, std::size_t input_dim,
                          std::size_t hidden_dim) {
  LstmCell c;
  c.input_dim = input_dim;
  c.hidden_dim = hidden_dim;
  c.W_i = params.add(prefix + ".W_i", {input_dim, hidden_dim});
  c.W_f = params.add(prefix + ".W_f", {input_dim, hidden_dim});
  c.W_o = params.add(prefix + ".W_o", {input_dim, hidden_dim});
  c.W_g = params.add(prefix + ".W_g", {input_dim, hidden_dim});
  c.U_i = params.add(prefix + ".U_i", {hidden_dim, hidden_dim});
  c.U_f = params.add(prefix + ".U_f", {hidden_dim, hidden_dim});
  c.U_o = params.add(prefix + ".U_o", {hidden_dim, hidden_dim});
  c.U_g = params.add(prefix + ".U_g", {hidden_dim, hidden_dim});
  c.b_i = params.add(prefix + ".b_i", {hidden_dim});
  c.b_f = params.add(prefix + ".b_f", {hidden_dim});
  c.b_o = params.add(prefix + ".b_o", {hidden_dim});
  c.b_g = params.add(prefix + ".b_g", {hidden_dim});
  return c;
}

LinearHead LinearHead::create(ParamSet& params, const std::string& prefix, std::size_t in_dim,
                              std::size_t out_dim) {
  LinearHead h;
  h.in_dim = in_dim;
  h.out_dim = out_dim;
  h.W = params.add(prefix + ".W", {in_dim, out_dim});
  h.b = params.add(prefix + ".b", {out_dim});
  return h;
}

Tensor gru_step(Scope& s, const GruCell& cell, const Tensor& x, const Tensor& h_prev) {
  expect_len("gru_step input", x, cell.input_dim);
  expect_len("gru_step state", h_prev, cell.hidden_dim);
  const Tensor z = sigmoid(gate_preact(s, x, cell.W_z, h_prev, cell.U_z, cell.b_z));
  const Tensor r = sigmoid(gate_preact(s, x, cell.W_r, h_prev, cell.U_r, cell.b_r));
  const Tensor cand = tanh(gate_preact(s, x, cell.W_h, mul(r, h_prev), cell.U_h, cell.b_h));
  // (1 - z) * h + z * h~, written as h + z * (h~ - h)
  return add(h_prev, mul(z, sub(cand, h_prev)));
}

LstmState lstm_step(Scope& s, const LstmCell& cell, const Tensor& x, const Tensor& h_prev,
                    const Tensor& c_prev) {
  expect_len("lstm_step input", x, cell.input_dim);
  expect_len("lstm_step hidden", h_prev, cell.hidden_dim);
  expect_len("lstm_step cell", c_prev, cell.hidden_dim);
  const Tensor i = sigmoid(gate_preact(s, x, cell.W_i, h_prev, cell.U_i, cell.b_i));
  const Tensor f = sigmoid(gate_preact(s, x, cell.W_f, h_prev, cell.U_f, cell.b_f));
  const Tensor o = sigmoid(gate_preact(s, x, cell.W_o, h_prev, cell.U_o, cell.b_o));
  const Tensor g = tanh(gate_preact(s, x, cell.W_g, h_prev, cell.U_g, cell.b_g));
  const Tensor c = add(mul(f, c_prev), mul(i, g));
  return {mul(o, tanh(c)), c};
}

Tensor linear(Scope& s, const LinearHead& head, const Tensor& x) {
  expect_len("linear input", x, head.in_dim);
  return add(matmul(x, s.param(head.W)), s.param(head.b));
}

Tensor dropout(const Tensor& x, double ratio, bool training, std::mt19937_64& rng) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw ParameterError("dropout ratio must lie in [0, 1), got " + std::to_string(ratio));
  }
  if (!training || ratio == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - ratio);
  const double survivor = 1.0 / (1.0 - ratio);
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = keep(rng) ? survivor : 0.0;
  return mul(x, x.graph()->constant(x.shape(), std::move(mask)));
}

Tensor cross_entropy(const Tensor& probs, std::size_t label) {
  return neg_log_pick(probs, label, kLogClamp);
}

}  // namespace srl
