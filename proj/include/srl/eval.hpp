// SPDX-License-Identifier: Apache-2.0
//
// Evaluation protocols: per-horizon anticipation scores for segment-level
// data, the dense protocol over video fractions, and the component ablation
// grid.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srl/config.hpp"
#include "srl/data.hpp"
#include "srl/model.hpp"

namespace srl {

struct HeadScores {
  double top1 = 0.0;
  double top5 = 0.0;
  std::optional<double> mean_top5_recall;  // only with a many-shot list

  bool operator==(const HeadScores&) const = default;
};

struct HorizonReport {
  std::size_t horizon = 0;
  double seconds = 0.0;  // horizon * delta
  std::size_t count = 0;
  HeadScores activity;
  HeadScores verb;
  HeadScores noun;

  bool operator==(const HorizonReport&) const = default;
};

struct DenseFractionReport {
  double observed_fraction = 0.0;
  double predicted_fraction = 0.0;
  double mean_class_accuracy = 0.0;
  std::size_t frames = 0;

  bool operator==(const DenseFractionReport&) const = default;
};

struct EvalReport {
  std::string protocol;
  std::size_t instances = 0;
  std::size_t skipped = 0;  // segments or videos too short to evaluate
  std::vector<HorizonReport> horizons;
  std::vector<DenseFractionReport> dense;

  std::string to_json() const;
  /// One row per horizon (segment protocol) or per fraction (dense).
  std::string to_csv() const;
  const HorizonReport& at_horizon(std::size_t h) const;

  bool operator==(const EvalReport&) const = default;
};

/// Scores every eligible segment at horizons 1..a, each with its own
/// observed window of o frames ending h steps before the segment start.
EvalReport evaluate_egocentric(const SrlModel& model, const Dataset& data, std::size_t o = 6,
                               std::size_t a = 8, int threads = 1);

/// Frame-level predictor for the dense protocol.
class DensePredictor {
 public:
  virtual ~DensePredictor() = default;
  /// Activity ids for the `count` frames that follow the first `observed`
  /// frames of `seq`.
  virtual std::vector<int> predict(const FeatureSequence& seq, std::size_t observed,
                                   std::size_t count) const = 0;
};

/// Rolls the model out frame by frame from the observed prefix, uniformly
/// subsampled to `o` frames ending at the last observed frame.
class ModelDensePredictor : public DensePredictor {
 public:
  ModelDensePredictor(const SrlModel& model, std::size_t o) : model_(model), o_(o) {}
  std::vector<int> predict(const FeatureSequence& seq, std::size_t observed,
                           std::size_t count) const override;

 private:
  const SrlModel& model_;
  std::size_t o_;
};

/// Frame indices used to summarize the first `n` frames with `o` rows.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t o);

inline const std::vector<double> kDensePredictedFractions = {0.1, 0.2, 0.3, 0.5};

/// Observes the first observed_fraction of each video and predicts the next
/// predicted_fraction of the video (clipped to its end). Videos without an
/// observed frame are skipped. Accuracy is the class-mean over all labeled
/// predicted frames of the dataset.
EvalReport evaluate_dense(const DensePredictor& predictor, const Dataset& data,
                          double observed_fraction,
                          const std::vector<double>& predicted_fractions = kDensePredictedFractions,
                          int threads = 1);

struct AblationVariant {
  std::string name;
  bool revision = false;
  bool reattend = false;
  bool semantic_context = false;
};

/// The 8 component combinations, Baseline first and the full model last.
std::vector<AblationVariant> ablation_variants();

struct AblationRun {
  AblationVariant variant;
  std::uint64_t seed = 0;
  EvalReport report;
};

struct AblationSettings {
  ModelConfig model;  // fitted to the data; component flags are overwritten
  TrainConfig train;  // seed is overwritten per run
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

/// Trains and evaluates every variant for every seed; each seed's variants
/// share initial weights, shuffles and negative draws.
std::vector<AblationRun> run_ablation(const Dataset& train_data, const Dataset& test_data,
                                      const AblationSettings& settings);

/// Seed-averaged top-1 activity accuracy of one variant at one horizon.
double ablation_mean_top1(const std::vector<AblationRun>& runs, const std::string& variant,
                          std::size_t horizon);

/// One row per configuration x horizon, averaged over seeds.
std::string ablation_csv(const std::vector<AblationRun>& runs);

struct GridPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double top1 = 0.0;  // mean activity top-1 over horizons
};

/// Trains one model per (alpha, beta) pair and scores it on `val_data`.
std::vector<GridPoint> grid_search_alpha_beta(const Dataset& train_data, const Dataset& val_data,
                                              const ModelConfig& model, const TrainConfig& train,
                                              const std::vector<double>& alphas,
                                              const std::vector<double>& betas);

}  // namespace srl
