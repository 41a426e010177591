// SPDX-License-Identifier: Apache-2.0
//
// Desk-scale synthetic activity data: a Markov chain over activity classes
// (optionally second order, so the class two segments back matters), a fixed
// random unit prototype per class, and frames = prototype + Gaussian noise.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "srl/data.hpp"

namespace srl {

struct SynthConfig {
  std::size_t n_classes = 20;
  std::size_t n_nouns = 5;  // class = verb * n_nouns + noun
  std::size_t dim = 32;
  std::size_t n_videos = 200;
  std::size_t segments_per_video = 8;
  std::size_t min_segment_frames = 4;
  std::size_t max_segment_frames = 12;
  /// Explicit n x n row-stochastic matrix; empty selects a random successor
  /// cycle followed with probability p_follow (otherwise uniform).
  std::vector<std::vector<double>> transition_matrix;
  double p_follow = 0.9;
  /// 2: the successor is a fixed random function of the (previous, current)
  /// class pair instead of the current class alone.
  int context_order = 1;
  double noise_std = 0.1;
  double delta_s = 0.25;
  std::size_t many_shot_min_count = 20;
  std::uint64_t seed = 1;

  /// Throws ParameterError.
  void validate() const;
};

/// The first-order transition matrix the generator uses (order-1 configs).
std::vector<std::vector<double>> resolved_transition_matrix(const SynthConfig& config);

Dataset generate_synthetic(const SynthConfig& config);

}  // namespace srl
