// SPDX-License-Identifier: Apache-2.0
//
// The self-regulated anticipation model: observed encoding, recursive
// prediction with a contrastive revision loss, cosine reattending, GRU fusion
// and activity / verb / noun heads.
//
// One recursive step t (row vectors, [a, b] is concatenation):
//
//   h1_t = GRU1([h_o, h2_{t-1}], h1_{t-1})
//   s_t  = cos(F_j, h1_t)               for each observed frame j
//   f1_t = sum_j s_t[j] F_j            (weights are not renormalized)
//   h2_t = GRU2([h1_t, f1_t], h2_{t-1})
//
// With reattending disabled h2_t = h1_t, which leaves a single recurrent
// predictor. Heads read [h2_ts, h1_ts] at the target step ts.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "srl/data.hpp"
#include "srl/layers.hpp"
#include "srl/negatives.hpp"
#include "srl/params.hpp"
#include "srl/tensor.hpp"

namespace srl {

enum class Aggregator { Gru, Lstm, Avg, Max };
enum class StateInit { Observed, Zero };

std::string to_string(Aggregator a);
Aggregator parse_aggregator(const std::string& s);
std::string to_string(StateInit s);
StateInit parse_state_init(const std::string& s);

struct ModelConfig {
  std::size_t dim = 32;
  Aggregator aggregator = Aggregator::Gru;
  std::size_t num_activities = 1;
  std::size_t num_verbs = 1;
  std::size_t num_nouns = 1;
  double dropout = 0.5;
  bool dropout_gru_inputs = true;
  double alpha = 0.01;
  double beta = 0.8;
  std::size_t num_samples = 128;  // N: one positive plus N-1 negatives
  SamplingMode sampling = SamplingMode::AllVideo;
  double temperature = 1.0;
  StateInit state_init = StateInit::Observed;
  bool use_revision = true;
  bool use_reattend = true;
  bool use_semantic_context = true;

  /// Throws ParameterError on any violated invariant.
  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;

  bool operator==(const ModelConfig&) const = default;
};

class SrlModel {
 public:
  explicit SrlModel(const ModelConfig& config);

  /// Seeded uniform(+-1/sqrt(fan_in)) weights, zero biases.
  void init(std::mt19937_64& rng);

  const ModelConfig& config() const noexcept { return config_; }
  ParamSet& params() noexcept { return params_; }
  const ParamSet& params() const noexcept { return params_; }

  const std::optional<GruCell>& aggregator_gru() const noexcept { return agg_gru_; }
  const std::optional<LstmCell>& aggregator_lstm() const noexcept { return agg_lstm_; }
  const GruCell& gru1() const noexcept { return gru1_; }
  const GruCell& gru2() const noexcept { return gru2_; }
  const LinearHead& head_activity() const noexcept { return head_a_; }
  const LinearHead& head_verb() const noexcept { return head_v_; }
  const LinearHead& head_noun() const noexcept { return head_n_; }

 private:
  ModelConfig config_;
  ParamSet params_;
  std::optional<GruCell> agg_gru_;
  std::optional<LstmCell> agg_lstm_;
  GruCell gru1_;
  GruCell gru2_;
  LinearHead head_a_;
  LinearHead head_v_;
  LinearHead head_n_;
};

/// Independent random streams consumed during one instance's forward pass.
struct InstanceRng {
  std::mt19937_64 dropout;
  std::mt19937_64 sampling;
};

struct ObservedEncoding {
  Tensor frames;               // [o x d] constant
  std::vector<Tensor> rows;    // o constants of [d]
  Tensor h_o;                  // [d]
};

struct RolloutState {
  Tensor h1;
  Tensor h2;
  std::size_t t = 0;
  std::vector<Tensor> attention;      // s_t per completed step
  std::vector<Tensor> revision_losses;
};

struct Reattention {
  Tensor weights;  // s_t, [o]
  Tensor context;  // f1_t, [d]
};

struct HeadOutputs {
  Tensor p_activity;
  Tensor p_verb;
  Tensor p_noun;
};

/// Dropout switch threaded through the step functions.
struct StepMode {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

/// Throws InputError for an empty sequence and DimensionError for rows whose
/// width differs from the model dimension.
ObservedEncoding encode_observed(Scope& scope, const SrlModel& model, const Matrix& observed);

RolloutState initial_state(Scope& scope, const SrlModel& model, const ObservedEncoding& enc);

Tensor predict_step(Scope& scope, const SrlModel& model, const Tensor& h_o,
                    const Tensor& h2_prev, const Tensor& h1_prev, StepMode mode = {});

/// InfoNCE over dot-product logits: row 0 of `samples` is the positive.
/// Samples are graph constants; only h1 receives gradient.
Tensor revision_loss(const Tensor& h1, const Matrix& samples, double temperature = 1.0);
Tensor revision_loss(const Tensor& h1, std::span<const double> positive,
                     const std::vector<std::span<const double>>& negatives,
                     double temperature = 1.0);

Reattention reattend(const Tensor& h1, const Tensor& frames);

Tensor fuse(Scope& scope, const SrlModel& model, const Tensor& h1, const Tensor& f1,
            const Tensor& h2_prev, StepMode mode = {});

HeadOutputs heads(Scope& scope, const SrlModel& model, const Tensor& h1, const Tensor& h2,
                  StepMode mode = {});

/// Advances one recursive step (predict, reattend, fuse) without revision.
void advance(Scope& scope, const SrlModel& model, const ObservedEncoding& enc,
             RolloutState& state, StepMode mode = {});

struct LossTerms {
  Tensor total;
  double activity = 0.0;  // L_a
  double verb = 0.0;      // L_v
  double noun = 0.0;      // L_n
  double revision = 0.0;  // sum over steps of L_rev
};

/// Builds the joint objective L_a + alpha (L_n + L_v) + beta sum_t L_rev for one
/// instance. Disabled components contribute zero weight. Revision needs the
/// instance's future rows and, for N > 1, a negative bank.
LossTerms forward_loss(Scope& scope, const SrlModel& model, const AnticipationInstance& instance,
                       const NegativeBank* bank, InstanceRng& rng, bool training);

struct HorizonPrediction {
  std::size_t horizon = 0;
  std::vector<double> p_activity;
  std::vector<double> p_verb;
  std::vector<double> p_noun;

  bool operator==(const HorizonPrediction&) const = default;
};

struct PredictionResult {
  std::vector<HorizonPrediction> horizons;
  std::vector<std::vector<double>> attention;  // s_t for t = 1..max horizon

  bool operator==(const PredictionResult&) const = default;
};

/// Eval-mode recursive anticipation; emits head outputs at each requested
/// horizon (ascending, >= 1).
PredictionResult rollout(const SrlModel& model, const Matrix& observed,
                         const std::vector<std::size_t>& horizons);

/// h_o alone, e.g. for attention-based modality fusion.
std::vector<double> observed_representation(const SrlModel& model, const Matrix& observed);

}  // namespace srl
