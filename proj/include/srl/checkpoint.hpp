// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoints. Layout (all integers and floats little-endian):
//
//   "SRLCKPT1"                      8-byte magic
//   u32 version
//   u64 model config hash, u64 train config hash
//   u32 length + model config JSON, u32 length + train config JSON
//   u64 completed epochs, u64 seed
//   u32 parameter count, then per parameter:
//       u32 name length + name, u32 rank, u64 dims[rank], f64 values[]
//   u8 optimizer kind (0 sgd, 1 adam), u64 step,
//       per parameter f64 first-moment[], then (adam) f64 second-moment[]
//   u64 FNV-1a checksum of every preceding byte
//
// Every RNG stream is a pure function of (seed, stream, epoch, position), so
// the seed plus the epoch counter is the complete RNG state.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srl/config.hpp"
#include "srl/model.hpp"
#include "srl/optim.hpp"
#include "srl/params.hpp"

namespace srl {

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  ModelConfig model;
  TrainConfig train;
  std::vector<Parameter> params;
  OptimizerState optimizer;
  std::uint64_t epoch = 0;  // completed epochs
  std::uint64_t seed = 0;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint make_checkpoint(const SrlModel& model, const TrainConfig& train,
                           const OptimizerState& optimizer, std::uint64_t epoch);

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws CheckpointError on bad magic, version, checksum, hash, or layout.
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Builds a model from the stored config and copies the parameters in.
SrlModel model_from_checkpoint(const Checkpoint& ckpt);

/// Copies stored parameters into `model` after checking every name and
/// shape; on error the model is left untouched.
void restore_parameters(const Checkpoint& ckpt, SrlModel& model);

}  // namespace srl
