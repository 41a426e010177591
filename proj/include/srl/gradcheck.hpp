// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference verification of the analytic gradients of the
// full training objective.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "srl/model.hpp"
#include "srl/negatives.hpp"

namespace srl {

struct GradcheckConfig {
  std::size_t dim = 8;
  std::size_t observed = 3;
  std::size_t horizon = 2;
  std::size_t num_samples = 4;
  std::size_t num_classes = 3;  // per head
  Aggregator aggregator = Aggregator::Gru;
  double alpha = 0.5;
  double beta = 0.5;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;
};

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradcheckReport {
  std::vector<ParamCheck> params;
  double worst_rel_error = 0.0;
  std::string worst_param;
  bool passed = false;

  std::string to_json() const;
};

/// Optional fault injection: receives the analytic gradients before they are
/// compared, so tests can corrupt one entry.
using GradientHook = std::function<void(const ParamSet&, GradientSet&)>;

/// Denominator floor of the relative error. Central differences with a 1e-5
/// step carry an absolute error near 1e-10, so gradients smaller than this
/// are compared on an absolute scale.
inline constexpr double kRelErrorFloor = 1e-6;

/// |a - n| / max(|a|, |n|, kRelErrorFloor).
double relative_error(double analytic, double numeric);

/// A random model plus one instance with future rows and a negative bank;
/// dropout is disabled so the loss is a deterministic function of weights.
struct GradcheckProblem {
  SrlModel model;
  AnticipationInstance instance;
  NegativeBank bank;
};

GradcheckProblem make_gradcheck_problem(const GradcheckConfig& cfg);

/// Loss of the problem's instance under the current weights with a fixed
/// sampling stream, so every evaluation sees the same negatives.
double gradcheck_loss(const GradcheckProblem& problem, std::uint64_t seed);

GradcheckReport run_gradcheck(const GradcheckConfig& cfg, const GradientHook& hook = {});

}  // namespace srl
