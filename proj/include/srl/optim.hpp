// SPDX-License-Identifier: Apache-2.0
//
// SGD with momentum and Adam. Weight decay is classic L2: it is folded into
// the gradient (g + wd * w) before either update rule.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "srl/params.hpp"

namespace srl {

enum class OptimizerKind { Sgd, Adam };

std::string to_string(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 0.1;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-5;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  /// Step decay: lr *= lr_decay every lr_decay_every epochs; 0 keeps lr constant.
  std::size_t lr_decay_every = 0;
  double lr_decay = 0.1;

  void validate() const;
  /// Learning rate in effect during `epoch` (0-based).
  double lr_at(std::size_t epoch) const;

  bool operator==(const OptimizerConfig&) const = default;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Sgd;
  std::uint64_t step = 0;
  GradientSet first;   // SGD velocity or Adam first moment
  GradientSet second;  // Adam second moment (empty for SGD)

  static OptimizerState for_params(const ParamSet& params, OptimizerKind kind);
  bool operator==(const OptimizerState&) const = default;
};

/// v <- momentum v + g + wd w;  w <- w - lr v.
/// Throws StateError when gradients or state do not cover every parameter.
void sgd_step(ParamSet& params, const GradientSet& grads, OptimizerState& state,
              const OptimizerConfig& cfg);

/// Bias-corrected Adam on g + wd w.
void adam_step(ParamSet& params, const GradientSet& grads, OptimizerState& state,
               const OptimizerConfig& cfg);

/// Dispatches on cfg.kind.
void optimizer_step(ParamSet& params, const GradientSet& grads, OptimizerState& state,
                    const OptimizerConfig& cfg);

}  // namespace srl
