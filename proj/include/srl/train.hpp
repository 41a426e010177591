// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training of the joint objective. Every instance's forward and
// backward pass is independent given read-only parameters; the per-instance
// gradients are then summed in batch order, so the serial and the OpenMP
// kernels produce bit-identical results.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "srl/checkpoint.hpp"
#include "srl/config.hpp"
#include "srl/data.hpp"
#include "srl/errors.hpp"
#include "srl/model.hpp"
#include "srl/negatives.hpp"

namespace srl {

struct LossComponents {
  double total = 0.0;
  double activity = 0.0;
  double verb = 0.0;
  double noun = 0.0;
  double revision = 0.0;

  bool finite() const;
  bool operator==(const LossComponents&) const = default;
};

struct TrainingData {
  std::vector<AnticipationInstance> instances;
  NegativeBank bank;
  std::size_t skipped_segments = 0;
  std::size_t unlabeled_windows = 0;
};

/// Builds the protocol's instances (dropping windows without labels) and the
/// negative bank, drawn from the Bank stream of `seed`.
TrainingData prepare_training_data(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed);

/// Per-instance random streams for one position of one epoch's ordering.
InstanceRng instance_rng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t position);

struct InstanceGradient {
  LossComponents loss;
  GradientSet grads;  // sparse: parameters outside the graph stay empty
};

InstanceGradient instance_gradient(const SrlModel& model, const AnticipationInstance& instance,
                                   const NegativeBank* bank, InstanceRng& rng);

/// One batch: `items[k]` sits at position `first_position + k` of the epoch.
struct BatchRequest {
  std::span<const AnticipationInstance* const> items;
  const NegativeBank* bank = nullptr;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t first_position = 0;
};

struct BatchResult {
  LossComponents mean;
  LossComponents sum;
  GradientSet grads;  // gradient of the batch-mean loss, dense
  std::size_t count = 0;
};

BatchResult batch_gradients_serial(const SrlModel& model, const BatchRequest& req);
BatchResult batch_gradients_parallel(const SrlModel& model, const BatchRequest& req, int threads);
/// Serial for threads <= 1.
BatchResult batch_gradients(const SrlModel& model, const BatchRequest& req, int threads);

/// Raised when a batch loss is not finite.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(std::size_t epoch, std::size_t batch, const LossComponents& loss);

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }
  const LossComponents& loss() const noexcept { return loss_; }
  /// Single-line JSON with epoch, batch and the component values.
  std::string diagnostics_json() const;

 private:
  std::size_t epoch_;
  std::size_t batch_;
  LossComponents loss_;
};

struct EpochLog {
  std::size_t epoch = 0;  // 0-based
  double lr = 0.0;
  std::size_t instances = 0;
  std::size_t batches = 0;
  LossComponents mean;  // instance-weighted mean over the epoch

  std::string to_json() const;
};

struct TrainCallbacks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(std::size_t epoch, std::size_t batch, const LossComponents&)> on_batch;
};

/// Trains `model` in place from its current parameters (or from `resume`) up
/// to cfg.optim.epochs and returns the final checkpoint. Resuming requires
/// the same model config, seed and training hash; only the epoch budget and
/// thread count may differ.
Checkpoint train(SrlModel& model, const Dataset& data, const TrainConfig& cfg,
                 const TrainCallbacks& callbacks = {}, const Checkpoint* resume = nullptr);

/// Same loop over prepared data.
Checkpoint train_on(SrlModel& model, const TrainingData& data, const TrainConfig& cfg,
                    const TrainCallbacks& callbacks = {}, const Checkpoint* resume = nullptr);

/// Seeded model construction; weights come from the Init stream of `seed`.
SrlModel make_model(const ModelConfig& config, std::uint64_t seed);

/// Copies the feature width and the class counts of the dataset.
void fit_model_config_to(ModelConfig& config, const Dataset& data);

}  // namespace srl
