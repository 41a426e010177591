// SPDX-License-Identifier: Apache-2.0
//
// Combining per-modality predictions: plain averaging (late fusion) and a
// learned convex combination whose weights come from a three-layer MLP over
// the concatenated observed representations.

#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "srl/layers.hpp"
#include "srl/model.hpp"
#include "srl/params.hpp"

namespace srl {

/// Arithmetic mean of per-class probabilities at every horizon. Throws
/// InputError for fewer than two results or mismatched label spaces.
PredictionResult fuse_modalities_late(const std::vector<PredictionResult>& results);

/// Convex combination with explicit modality weights (which must sum to 1).
PredictionResult fuse_weighted(const std::vector<PredictionResult>& results,
                               const std::vector<double>& weights);

class AttentionFusion {
 public:
  /// hidden defaults to {2 * dim * modalities, dim} when empty.
  AttentionFusion(std::size_t dim, std::size_t modalities, std::vector<std::size_t> hidden = {});

  void init(std::mt19937_64& rng);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t modalities() const noexcept { return modalities_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }

  /// Softmax modality weights as a graph tensor: tanh(tanh(x W1 + b1) W2 + b2) W3 + b3.
  Tensor weights(Scope& scope, const std::vector<std::vector<double>>& observed_reps) const;
  std::vector<double> weights(const std::vector<std::vector<double>>& observed_reps) const;

  /// Cross entropy of the fused activity distribution at one horizon,
  /// differentiable with respect to the MLP only.
  Tensor loss(Scope& scope, const std::vector<std::vector<double>>& observed_reps,
              const std::vector<std::vector<double>>& activity_dists, std::size_t label) const;

 private:
  std::size_t dim_;
  std::size_t modalities_;
  ParamSet params_;
  LinearHead l1_, l2_, l3_;
};

/// Throws InputError when the number of representations and results differ.
PredictionResult fuse_modalities_attention(const AttentionFusion& fusion,
                                           const std::vector<std::vector<double>>& observed_reps,
                                           const std::vector<PredictionResult>& results);

/// One fitting example for the fusion MLP.
struct FusionExample {
  std::vector<std::vector<double>> observed_reps;   // per modality
  std::vector<std::vector<double>> activity_dists;  // per modality
  std::size_t label = 0;
};

/// Plain gradient descent on the mean fused cross entropy; returns the final
/// mean loss.
double fit_attention_fusion(AttentionFusion& fusion, const std::vector<FusionExample>& examples,
                            double lr, std::size_t epochs);

}  // namespace srl
