// SPDX-License-Identifier: Apache-2.0
//
// Training configuration and named hyperparameter presets.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "srl/model.hpp"
#include "srl/optim.hpp"
#include "srl/rng.hpp"

namespace srl {

enum class Protocol { Egocentric, Dense };

std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& s);

struct TrainConfig {
  OptimizerConfig optim;
  Protocol protocol = Protocol::Egocentric;
  std::size_t observed = 6;     // o
  std::size_t anticipated = 8;  // a
  std::size_t dense_stride = 1;
  int threads = 1;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  /// Hash of everything that shapes the trajectory of a run except the epoch
  /// budget and thread count, so a run can be resumed with a larger budget.
  std::uint64_t hash() const;

  bool operator==(const TrainConfig&) const = default;
};

struct Preset {
  std::string name;
  ModelConfig model;  // class counts and dim are filled from the dataset
  TrainConfig train;
};

/// epic, egtea, salads, breakfast (full-scale settings) and epic-desk,
/// dense-desk (desk-scale variants).
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace srl
