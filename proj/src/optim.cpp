// SPDX-License-Identifier: Apache-2.0

#include "srl/optim.hpp"

#include <cmath>

#include "srl/errors.hpp"

namespace srl {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd" || s == "SGD") return OptimizerKind::Sgd;
  if (s == "adam" || s == "Adam") return OptimizerKind::Adam;
  throw ParameterError("unknown optimizer '" + s + "'");
}

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0)) throw ParameterError("lr must be >= 0");
  if (batch_size == 0) throw ParameterError("batch_size must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ParameterError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ParameterError("beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw ParameterError("eps must be > 0");
  if (!(weight_decay >= 0.0)) throw ParameterError("weight_decay must be >= 0");
  if (!(lr_decay > 0.0)) throw ParameterError("lr_decay must be > 0");
}

double OptimizerConfig::lr_at(std::size_t epoch) const {
  if (lr_decay_every == 0) return lr;
  return lr * std::pow(lr_decay, static_cast<double>(epoch / lr_decay_every));
}

OptimizerState OptimizerState::for_params(const ParamSet& params, OptimizerKind kind) {
  OptimizerState s;
  s.kind = kind;
  s.first = params.zero_gradients();
  if (kind == OptimizerKind::Adam) s.second = params.zero_gradients();
  return s;
}

namespace {

void check_shapes(const ParamSet& params, const GradientSet& grads, const GradientSet& buf,
                  const char* what) {
  if (grads.size() != params.size()) {
    throw StateError(std::string(what) + ": gradients cover " + std::to_string(grads.size()) +
                     " of " + std::to_string(params.size()) + " parameters");
  }
  if (buf.size() != params.size()) throw StateError(std::string(what) + ": state not initialized");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::size_t n = params[i].values.size();
    if (grads[i].size() != n) {
      throw StateError(std::string(what) + ": missing gradient for " + params[i].name);
    }
    if (buf[i].size() != n) throw StateError(std::string(what) + ": state mismatch for " + params[i].name);
  }
}

}  // namespace

void sgd_step(ParamSet& params, const GradientSet& grads, OptimizerState& state,
              const OptimizerConfig& cfg) {
  if (state.kind != OptimizerKind::Sgd) throw StateError("sgd_step: state belongs to Adam");
  check_shapes(params, grads, state.first, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].values;
    auto& v = state.first[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = cfg.momentum * v[k] + g[k] + cfg.weight_decay * w[k];
      w[k] -= cfg.lr * v[k];
    }
  }
  ++state.step;
}

void adam_step(ParamSet& params, const GradientSet& grads, OptimizerState& state,
               const OptimizerConfig& cfg) {
  if (state.kind != OptimizerKind::Adam) throw StateError("adam_step: state belongs to SGD");
  check_shapes(params, grads, state.first, "adam_step");
  check_shapes(params, grads, state.second, "adam_step");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& w = params[i].values;
    auto& m = state.first[i];
    auto& v = state.second[i];
    const auto& g = grads[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k] + cfg.weight_decay * w[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
      const double m_hat = m[k] / c1;
      const double v_hat = v[k] / c2;
      w[k] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void optimizer_step(ParamSet& params, const GradientSet& grads, OptimizerState& state,
                    const OptimizerConfig& cfg) {
  if (cfg.kind == OptimizerKind::Sgd) {
    sgd_step(params, grads, state, cfg);
  } else {
    adam_step(params, grads, state, cfg);
  }
}

}  // namespace srl
