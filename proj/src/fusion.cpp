// SPDX-License-Identifier: Apache-2.0

#include "srl/fusion.hpp"

#include <cmath>

#include "srl/errors.hpp"

namespace srl {

namespace {

void check_compatible(const std::vector<PredictionResult>& results) {
  if (results.size() < 2) throw InputError("modality fusion needs at least two results");
  const auto& ref = results.front();
  for (const auto& r : results) {
    if (r.horizons.size() != ref.horizons.size()) {
      throw InputError("modality fusion: results cover different horizons");
    }
    for (std::size_t h = 0; h < r.horizons.size(); ++h) {
      const auto& a = r.horizons[h];
      const auto& b = ref.horizons[h];
      if (a.horizon != b.horizon || a.p_activity.size() != b.p_activity.size() ||
          a.p_verb.size() != b.p_verb.size() || a.p_noun.size() != b.p_noun.size()) {
        throw InputError("modality fusion: mismatched label spaces");
      }
    }
  }
}

PredictionResult zeros_like(const PredictionResult& ref) {
  PredictionResult out;
  for (const auto& hp : ref.horizons) {
    HorizonPrediction z;
    z.horizon = hp.horizon;
    z.p_activity.assign(hp.p_activity.size(), 0.0);
    z.p_verb.assign(hp.p_verb.size(), 0.0);
    z.p_noun.assign(hp.p_noun.size(), 0.0);
    out.horizons.push_back(std::move(z));
  }
  return out;
}

void axpy(std::vector<double>& dst, double w, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
}

}  // namespace

PredictionResult fuse_modalities_late(const std::vector<PredictionResult>& results) {
  check_compatible(results);
  PredictionResult out = zeros_like(results.front());
  const double m = static_cast<double>(results.size());
  for (std::size_t h = 0; h < out.horizons.size(); ++h) {
    auto& dst = out.horizons[h];
    for (const auto& r : results) {
      const auto& src = r.horizons[h];
      for (std::size_t i = 0; i < dst.p_activity.size(); ++i) dst.p_activity[i] += src.p_activity[i];
      for (std::size_t i = 0; i < dst.p_verb.size(); ++i) dst.p_verb[i] += src.p_verb[i];
      for (std::size_t i = 0; i < dst.p_noun.size(); ++i) dst.p_noun[i] += src.p_noun[i];
    }
    for (auto& v : dst.p_activity) v /= m;
    for (auto& v : dst.p_verb) v /= m;
    for (auto& v : dst.p_noun) v /= m;
  }
  return out;
}

PredictionResult fuse_weighted(const std::vector<PredictionResult>& results,
                               const std::vector<double>& weights) {
  check_compatible(results);
  if (weights.size() != results.size()) {
    throw InputError("modality fusion: " + std::to_string(weights.size()) + " weights for " +
                     std::to_string(results.size()) + " modalities");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw InputError("modality fusion: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("modality fusion: weights must sum to 1");
  PredictionResult out = zeros_like(results.front());
  for (std::size_t h = 0; h < out.horizons.size(); ++h) {
    auto& dst = out.horizons[h];
    for (std::size_t m = 0; m < results.size(); ++m) {
      const auto& src = results[m].horizons[h];
      axpy(dst.p_activity, weights[m], src.p_activity);
      axpy(dst.p_verb, weights[m], src.p_verb);
      axpy(dst.p_noun, weights[m], src.p_noun);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// AttentionFusion

AttentionFusion::AttentionFusion(std::size_t dim, std::size_t modalities,
                                 std::vector<std::size_t> hidden)
    : dim_(dim), modalities_(modalities) {
  if (dim == 0) throw ParameterError("attention fusion: dim must be >= 1");
  if (modalities < 2) throw ParameterError("attention fusion: needs >= 2 modalities");
  if (hidden.empty()) hidden = {2 * dim * modalities, dim};
  if (hidden.size() != 2 || hidden[0] == 0 || hidden[1] == 0) {
    throw ParameterError("attention fusion: expects two positive hidden sizes");
  }
  l1_ = LinearHead::create(params_, "fusion.l1", dim * modalities, hidden[0]);
  l2_ = LinearHead::create(params_, "fusion.l2", hidden[0], hidden[1]);
  l3_ = LinearHead::create(params_, "fusion.l3", hidden[1], modalities);
}

void AttentionFusion::init(std::mt19937_64& rng) { params_.init_uniform(rng); }

Tensor AttentionFusion::weights(Scope& scope,
                                const std::vector<std::vector<double>>& observed_reps) const {
  if (observed_reps.size() != modalities_) {
    throw InputError("attention fusion: expected " + std::to_string(modalities_) +
                     " representations, got " + std::to_string(observed_reps.size()));
  }
  std::vector<double> x;
  x.reserve(dim_ * modalities_);
  for (const auto& r : observed_reps) {
    if (r.size() != dim_) throw DimensionError("attention fusion: representation width mismatch");
    x.insert(x.end(), r.begin(), r.end());
  }
  const std::size_t width = x.size();  // read before x is moved from
  const Tensor in = scope.constant({width}, std::move(x));
  const Tensor a1 = tanh(linear(scope, l1_, in));
  const Tensor a2 = tanh(linear(scope, l2_, a1));
  return softmax(linear(scope, l3_, a2));
}

std::vector<double> AttentionFusion::weights(
    const std::vector<std::vector<double>>& observed_reps) const {
  Graph g;
  Scope scope(g, params_);
  const auto w = weights(scope, observed_reps).values();
  return {w.begin(), w.end()};
}

Tensor AttentionFusion::loss(Scope& scope, const std::vector<std::vector<double>>& observed_reps,
                             const std::vector<std::vector<double>>& activity_dists,
                             std::size_t label) const {
  if (activity_dists.size() != modalities_) {
    throw InputError("attention fusion: modality count mismatch");
  }
  const std::size_t classes = activity_dists.front().size();
  std::vector<double> stacked;
  stacked.reserve(classes * modalities_);
  for (const auto& p : activity_dists) {
    if (p.size() != classes) throw InputError("attention fusion: mismatched label spaces");
    stacked.insert(stacked.end(), p.begin(), p.end());
  }
  const Tensor w = weights(scope, observed_reps);
  const Tensor dists = scope.constant({modalities_, classes}, std::move(stacked));
  return cross_entropy(matmul(w, dists), label);
}

PredictionResult fuse_modalities_attention(const AttentionFusion& fusion,
                                           const std::vector<std::vector<double>>& observed_reps,
                                           const std::vector<PredictionResult>& results) {
  if (observed_reps.size() != results.size()) {
    throw InputError("attention fusion: " + std::to_string(observed_reps.size()) +
                     " representations for " + std::to_string(results.size()) + " results");
  }
  return fuse_weighted(results, fusion.weights(observed_reps));
}

double fit_attention_fusion(AttentionFusion& fusion, const std::vector<FusionExample>& examples,
                            double lr, std::size_t epochs) {
  if (examples.empty()) throw InputError("fit_attention_fusion: no examples");
  double mean_loss = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) {
    GradientSet grads = fusion.params().zero_gradients();
    mean_loss = 0.0;
    for (const auto& ex : examples) {
      Graph g;
      Scope scope(g, fusion.params());
      const Tensor l = fusion.loss(scope, ex.observed_reps, ex.activity_dists, ex.label);
      g.backward(l);
      scope.accumulate_gradients(grads);
      mean_loss += l.item();
    }
    const double inv = 1.0 / static_cast<double>(examples.size());
    mean_loss *= inv;
    auto& ps = fusion.params().all();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      for (std::size_t k = 0; k < ps[i].values.size(); ++k) ps[i].values[k] -= lr * inv * grads[i][k];
    }
  }
  return mean_loss;
}

}  // namespace srl
