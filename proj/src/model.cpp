// SPDX-License-Identifier: Apache-2.0

#include "srl/model.hpp"

#include <cmath>

#include "json.hpp"
#include "srl/errors.hpp"
#include "srl/rng.hpp"

namespace srl {

using nlohmann::json;

std::string to_string(Aggregator a) {
  switch (a) {
    case Aggregator::Gru:
      return "gru";
    case Aggregator::Lstm:
      return "lstm";
    case Aggregator::Avg:
      return "avg";
    case Aggregator::Max:
      return "max";
  }
  return "gru";
}

Aggregator parse_aggregator(const std::string& s) {
  if (s == "gru") return Aggregator::Gru;
  if (s == "lstm") return Aggregator::Lstm;
  if (s == "avg") return Aggregator::Avg;
  if (s == "max") return Aggregator::Max;
  throw ParameterError("unknown aggregator '" + s + "'");
}

std::string to_string(StateInit s) { return s == StateInit::Observed ? "observed" : "zero"; }

StateInit parse_state_init(const std::string& s) {
  if (s == "observed") return StateInit::Observed;
  if (s == "zero") return StateInit::Zero;
  throw ParameterError("unknown state init '" + s + "'");
}

// ---------------------------------------------------------------------------
// ModelConfig

void ModelConfig::validate() const {
  if (dim == 0) throw ParameterError("dim must be >= 1");
  if (num_activities == 0 || num_verbs == 0 || num_nouns == 0) {
    throw ParameterError("class counts must be >= 1");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("beta must lie in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
  if (num_samples == 0) throw ParameterError("num_samples (N) must be >= 1");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
}

std::string ModelConfig::to_json() const {
  json j;
  j["dim"] = dim;
  j["aggregator"] = to_string(aggregator);
  j["num_activities"] = num_activities;
  j["num_verbs"] = num_verbs;
  j["num_nouns"] = num_nouns;
  j["dropout"] = dropout;
  j["dropout_gru_inputs"] = dropout_gru_inputs;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["num_samples"] = num_samples;
  j["sampling"] = to_string(sampling);
  j["temperature"] = temperature;
  j["state_init"] = to_string(state_init);
  j["use_revision"] = use_revision;
  j["use_reattend"] = use_reattend;
  j["use_semantic_context"] = use_semantic_context;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.dim = j.at("dim").get<std::size_t>();
    c.aggregator = parse_aggregator(j.at("aggregator").get<std::string>());
    c.num_activities = j.at("num_activities").get<std::size_t>();
    c.num_verbs = j.at("num_verbs").get<std::size_t>();
    c.num_nouns = j.at("num_nouns").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.dropout_gru_inputs = j.at("dropout_gru_inputs").get<bool>();
    c.alpha = j.at("alpha").get<double>();
    c.beta = j.at("beta").get<double>();
    c.num_samples = j.at("num_samples").get<std::size_t>();
    c.sampling = parse_sampling_mode(j.at("sampling").get<std::string>());
    c.temperature = j.at("temperature").get<double>();
    c.state_init = parse_state_init(j.at("state_init").get<std::string>());
    c.use_revision = j.at("use_revision").get<bool>();
    c.use_reattend = j.at("use_reattend").get<bool>();
    c.use_semantic_context = j.at("use_semantic_context").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t ModelConfig::hash() const {
  return fnv1a(to_json());
}

// ---------------------------------------------------------------------------
// SrlModel

SrlModel::SrlModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config_.dim;
  if (config_.aggregator == Aggregator::Gru) {
    agg_gru_ = GruCell::create(params_, "aggregator", d, d);
  } else if (config_.aggregator == Aggregator::Lstm) {
    agg_lstm_ = LstmCell::create(params_, "aggregator", d, d);
  }
  gru1_ = GruCell::create(params_, "gru1", 2 * d, d);
  gru2_ = GruCell::create(params_, "gru2", 2 * d, d);
  head_a_ = LinearHead::create(params_, "head_activity", 2 * d, config_.num_activities);
  head_v_ = LinearHead::create(params_, "head_verb", 2 * d, config_.num_verbs);
  head_n_ = LinearHead::create(params_, "head_noun", 2 * d, config_.num_nouns);
}

void SrlModel::init(std::mt19937_64& rng) { params_.init_uniform(rng); }

// ---------------------------------------------------------------------------
// Forward pieces

namespace {

Tensor maybe_dropout(const Tensor& x, const SrlModel& model, StepMode mode) {
  if (!mode.training || model.config().dropout == 0.0) return x;
  if (mode.rng == nullptr) throw InputError("training-mode dropout requires an RNG");
  return dropout(x, model.config().dropout, true, *mode.rng);
}

Tensor gru_input_dropout(const Tensor& x, const SrlModel& model, StepMode mode) {
  if (!model.config().dropout_gru_inputs) return x;
  return maybe_dropout(x, model, mode);
}

}  // namespace

ObservedEncoding encode_observed(Scope& scope, const SrlModel& model, const Matrix& observed) {
  const std::size_t d = model.config().dim;
  if (observed.rows == 0) throw InputError("encode_observed: empty observed sequence");
  if (observed.cols != d) {
    throw DimensionError("encode_observed: frame width " + std::to_string(observed.cols) +
                         " != model dim " + std::to_string(d));
  }
  ObservedEncoding enc;
  enc.frames = scope.constant({observed.rows, d}, observed.data);
  enc.rows.reserve(observed.rows);
  for (std::size_t j = 0; j < observed.rows; ++j) {
    const auto r = observed.row(j);
    enc.rows.push_back(scope.constant({d}, std::vector<double>(r.begin(), r.end())));
  }
  switch (model.config().aggregator) {
    case Aggregator::Gru: {
      Tensor h = scope.constant({d}, std::vector<double>(d, 0.0));
      for (const auto& x : enc.rows) h = gru_step(scope, *model.aggregator_gru(), x, h);
      enc.h_o = h;
      break;
    }
    case Aggregator::Lstm: {
      LstmState st{scope.constant({d}, std::vector<double>(d, 0.0)),
                   scope.constant({d}, std::vector<double>(d, 0.0))};
      for (const auto& x : enc.rows) st = lstm_step(scope, *model.aggregator_lstm(), x, st.h, st.c);
      enc.h_o = st.h;
      break;
    }
    case Aggregator::Avg:
      enc.h_o = mean_rows(enc.frames);
      break;
    case Aggregator::Max:
      enc.h_o = max_rows(enc.frames);
      break;
  }
  return enc;
}

RolloutState initial_state(Scope& scope, const SrlModel& model, const ObservedEncoding& enc) {
  RolloutState st;
  if (model.config().state_init == StateInit::Observed) {
    st.h1 = enc.h_o;
    st.h2 = enc.h_o;
  } else {
    const std::size_t d = model.config().dim;
    st.h1 = scope.constant({d}, std::vector<double>(d, 0.0));
    st.h2 = st.h1;
  }
  return st;
}

Tensor predict_step(Scope& scope, const SrlModel& model, const Tensor& h_o, const Tensor& h2_prev,
                    const Tensor& h1_prev, StepMode mode) {
  const Tensor x = gru_input_dropout(concat(h_o, h2_prev), model, mode);
  return gru_step(scope, model.gru1(), x, h1_prev);
}

Tensor revision_loss(const Tensor& h1, const Matrix& samples, double temperature) {
  if (samples.rows == 0) throw InputError("revision_loss: empty sample set");
  if (samples.cols != h1.size()) {
    throw DimensionError("revision_loss: sample width " + std::to_string(samples.cols) +
                         " != representation width " + std::to_string(h1.size()));
  }
  Graph& g = *h1.graph();
  const Tensor x = g.constant({samples.rows, samples.cols}, samples.data);
  Tensor logits = matmul(x, h1);
  if (temperature != 1.0) logits = scale(logits, 1.0 / temperature);
  return softmax_cross_entropy(logits, 0);
}

Tensor revision_loss(const Tensor& h1, std::span<const double> positive,
                     const std::vector<std::span<const double>>& negatives, double temperature) {
  const std::size_t d = h1.size();
  Matrix samples(1 + negatives.size(), d);
  auto put = [&](std::size_t r, std::span<const double> v) {
    if (v.size() != d) {
      throw DimensionError("revision_loss: sample width " + std::to_string(v.size()) +
                           " != representation width " + std::to_string(d));
    }
    std::copy(v.begin(), v.end(), samples.row(r).begin());
  };
  put(0, positive);
  for (std::size_t k = 0; k < negatives.size(); ++k) put(k + 1, negatives[k]);
  return revision_loss(h1, samples, temperature);
}

Reattention reattend(const Tensor& h1, const Tensor& frames) {
  if (frames.rank() != 2 || frames.shape()[0] == 0) {
    throw InputError("reattend: needs at least one observed frame");
  }
  Reattention r;
  r.weights = cosine_rows(frames, h1);
  r.context = matmul(r.weights, frames);
  return r;
}

Tensor fuse(Scope& scope, const SrlModel& model, const Tensor& h1, const Tensor& f1,
            const Tensor& h2_prev, StepMode mode) {
  const Tensor x = gru_input_dropout(concat(h1, f1), model, mode);
  return gru_step(scope, model.gru2(), x, h2_prev);
}

HeadOutputs heads(Scope& scope, const SrlModel& model, const Tensor& h1, const Tensor& h2,
                  StepMode mode) {
  const Tensor joint = concat(h2, h1);
  HeadOutputs out;
  out.p_activity = softmax(linear(scope, model.head_activity(), maybe_dropout(joint, model, mode)));
  out.p_verb = softmax(linear(scope, model.head_verb(), maybe_dropout(joint, model, mode)));
  out.p_noun = softmax(linear(scope, model.head_noun(), maybe_dropout(joint, model, mode)));
  return out;
}

void advance(Scope& scope, const SrlModel& model, const ObservedEncoding& enc,
             RolloutState& state, StepMode mode) {
  const Tensor h1 = predict_step(scope, model, enc.h_o, state.h2, state.h1, mode);
  Tensor h2 = h1;
  if (model.config().use_reattend) {
    const Reattention r = reattend(h1, enc.frames);
    h2 = fuse(scope, model, h1, r.context, state.h2, mode);
    state.attention.push_back(r.weights);
  }
  state.h1 = h1;
  state.h2 = h2;
  ++state.t;
}

LossTerms forward_loss(Scope& scope, const SrlModel& model, const AnticipationInstance& instance,
                       const NegativeBank* bank, InstanceRng& rng, bool training) {
  const ModelConfig& cfg = model.config();
  if (instance.horizon == 0) throw InputError("forward_loss: horizon must be >= 1");
  if (instance.labels.activity < 0 || instance.labels.verb < 0 || instance.labels.noun < 0) {
    throw InputError("forward_loss: instance labels missing");
  }

  const double alpha = cfg.use_semantic_context ? cfg.alpha : 0.0;
  const double beta = cfg.use_revision ? cfg.beta : 0.0;
  const bool future_ok = instance.has_future() && instance.future.cols == cfg.dim &&
                         instance.future_activity.size() >= instance.horizon;
  if (beta > 0.0 && !future_ok) {
    throw DataError("forward_loss: revision needs future features for video '" +
                    instance.video_id + "'");
  }
  const bool bank_ok = cfg.num_samples == 1 || (bank != nullptr && bank->size() > 0);
  if (beta > 0.0 && !bank_ok) throw DataError("forward_loss: revision needs a negative bank");
  const bool revise = cfg.use_revision && future_ok && bank_ok;

  const StepMode mode{training, &rng.dropout};
  const ObservedEncoding enc = encode_observed(scope, model, instance.observed);
  RolloutState state = initial_state(scope, model, enc);

  for (std::size_t t = 1; t <= instance.horizon; ++t) {
    const Tensor h1 = predict_step(scope, model, enc.h_o, state.h2, state.h1, mode);
    if (revise) {
      const auto positive = instance.future.row(t - 1);
      std::vector<std::span<const double>> negatives;
      if (cfg.num_samples > 1) {
        negatives = bank->sample(instance.future_activity[t - 1], instance.video_id, cfg.sampling,
                                 cfg.num_samples - 1, rng.sampling);
      }
      state.revision_losses.push_back(revision_loss(h1, positive, negatives, cfg.temperature));
    }
    Tensor h2 = h1;
    if (cfg.use_reattend) {
      const Reattention r = reattend(h1, enc.frames);
      h2 = fuse(scope, model, h1, r.context, state.h2, mode);
      state.attention.push_back(r.weights);
    }
    state.h1 = h1;
    state.h2 = h2;
    state.t = t;
  }

  const HeadOutputs p = heads(scope, model, state.h1, state.h2, mode);
  const Tensor la = cross_entropy(p.p_activity, static_cast<std::size_t>(instance.labels.activity));
  const Tensor lv = cross_entropy(p.p_verb, static_cast<std::size_t>(instance.labels.verb));
  const Tensor ln = cross_entropy(p.p_noun, static_cast<std::size_t>(instance.labels.noun));

  LossTerms terms;
  terms.activity = la.item();
  terms.verb = lv.item();
  terms.noun = ln.item();
  terms.total = la;
  if (alpha > 0.0) terms.total = add(terms.total, scale(add(ln, lv), alpha));
  if (!state.revision_losses.empty()) {
    Tensor rev = state.revision_losses.front();
    for (std::size_t k = 1; k < state.revision_losses.size(); ++k) {
      rev = add(rev, state.revision_losses[k]);
    }
    terms.revision = rev.item();
    if (beta > 0.0) terms.total = add(terms.total, scale(rev, beta));
  }
  return terms;
}

PredictionResult rollout(const SrlModel& model, const Matrix& observed,
                         const std::vector<std::size_t>& horizons) {
  if (horizons.empty()) throw ParameterError("rollout: no horizons requested");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 1) throw ParameterError("rollout: horizons must be >= 1");
    if (i > 0 && horizons[i] <= horizons[i - 1]) {
      throw ParameterError("rollout: horizons must be strictly ascending");
    }
  }
  Graph graph;
  Scope scope(graph, model.params());
  const ObservedEncoding enc = encode_observed(scope, model, observed);
  RolloutState state = initial_state(scope, model, enc);

  PredictionResult out;
  std::size_t next = 0;
  const std::size_t last = horizons.back();
  for (std::size_t t = 1; t <= last; ++t) {
    advance(scope, model, enc, state);
    if (model.config().use_reattend) {
      const auto w = state.attention.back().values();
      out.attention.emplace_back(w.begin(), w.end());
    }
    if (horizons[next] == t) {
      const HeadOutputs p = heads(scope, model, state.h1, state.h2);
      HorizonPrediction hp;
      hp.horizon = t;
      const auto pa = p.p_activity.values();
      const auto pv = p.p_verb.values();
      const auto pn = p.p_noun.values();
      hp.p_activity.assign(pa.begin(), pa.end());
      hp.p_verb.assign(pv.begin(), pv.end());
      hp.p_noun.assign(pn.begin(), pn.end());
      out.horizons.push_back(std::move(hp));
      ++next;
    }
  }
  return out;
}

std::vector<double> observed_representation(const SrlModel& model, const Matrix& observed) {
  Graph graph;
  Scope scope(graph, model.params());
  const auto v = encode_observed(scope, model, observed).h_o.values();
  return {v.begin(), v.end()};
}

}  // namespace srl
