// SPDX-License-Identifier: Apache-2.0

#include "srl/metrics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "srl/errors.hpp"

namespace srl {

std::size_t rank_of(std::span<const double> p, std::size_t label) {
  if (label >= p.size()) throw MetricError("label " + std::to_string(label) + " outside distribution");
  const double v = p[label];
  std::size_t ahead = 0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] > v || (p[c] == v && c < label)) ++ahead;
  }
  return ahead;
}

std::vector<std::size_t> topk_indices(std::span<const double> p, std::size_t k) {
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t n = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) { return p[a] > p[b] || (p[a] == p[b] && a < b); });
  idx.resize(n);
  return idx;
}

std::size_t argmax(std::span<const double> p) {
  if (p.empty()) throw MetricError("argmax of an empty distribution");
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = c;
  }
  return best;
}

namespace {

void check_aligned(const Distributions& preds, const std::vector<int>& labels) {
  if (preds.empty()) throw MetricError("metric over an empty prediction set");
  if (preds.size() != labels.size()) {
    throw MetricError("predictions (" + std::to_string(preds.size()) + ") and labels (" +
                      std::to_string(labels.size()) + ") are misaligned");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= preds[i].size()) {
      throw MetricError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                        " outside the distribution");
    }
  }
}

bool hit(const std::vector<double>& p, int label, std::size_t k) {
  return rank_of(p, static_cast<std::size_t>(label)) < k;
}

double macro(const std::map<int, std::pair<std::size_t, std::size_t>>& tally) {
  double sum = 0.0;
  for (const auto& [cls, counts] : tally) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return sum / static_cast<double>(tally.size());
}

}  // namespace

double topk_accuracy(const Distributions& preds, const std::vector<int>& labels, std::size_t k) {
  if (k == 0) throw MetricError("k must be >= 1");
  check_aligned(preds, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += hit(preds[i], labels[i], k) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double mean_topk_recall(const Distributions& preds, const std::vector<int>& labels, std::size_t k,
                        const std::vector<int>& classes, std::vector<int>* skipped) {
  if (classes.empty()) throw MetricError("mean top-k recall needs a nonempty class list");
  if (k == 0) throw MetricError("k must be >= 1");
  check_aligned(preds, labels);
  std::map<int, std::pair<std::size_t, std::size_t>> tally;  // class -> (hits, samples)
  for (int c : classes) tally.emplace(c, std::make_pair(0, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    auto it = tally.find(labels[i]);
    if (it == tally.end()) continue;
    ++it->second.second;
    if (hit(preds[i], labels[i], k)) ++it->second.first;
  }
  for (auto it = tally.begin(); it != tally.end();) {
    if (it->second.second == 0) {
      if (skipped != nullptr) skipped->push_back(it->first);
      it = tally.erase(it);
    } else {
      ++it;
    }
  }
  if (tally.empty()) throw MetricError("no listed class has ground-truth samples");
  return macro(tally);
}

double mean_class_accuracy(const Distributions& preds, const std::vector<int>& labels) {
  check_aligned(preds, labels);
  std::vector<int> hard(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) hard[i] = static_cast<int>(argmax(preds[i]));
  return mean_class_accuracy(hard, labels);
}

double mean_class_accuracy(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (labels.empty()) throw MetricError("metric over an empty prediction set");
  if (predicted.size() != labels.size()) throw MetricError("predictions and labels are misaligned");
  std::map<int, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& t = tally[labels[i]];
    ++t.second;
    if (predicted[i] == labels[i]) ++t.first;
  }
  return macro(tally);
}

}  // namespace srl
