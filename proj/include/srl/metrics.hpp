// SPDX-License-Identifier: Apache-2.0
//
// Classification metrics over predicted distributions. Ranking is by
// descending probability with ties broken by ascending class index.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace srl {

using Distributions = std::vector<std::vector<double>>;

/// Position of `label` in the ranking of `p` (0 = best).
std::size_t rank_of(std::span<const double> p, std::size_t label);
/// The k best classes in ranking order.
std::vector<std::size_t> topk_indices(std::span<const double> p, std::size_t k);
std::size_t argmax(std::span<const double> p);

/// Throws MetricError on empty or misaligned input, k = 0, or labels outside
/// the distribution.
double topk_accuracy(const Distributions& preds, const std::vector<int>& labels, std::size_t k);

/// Macro recall@k over `classes`. Listed classes without ground-truth samples
/// are skipped and reported through `skipped`. Throws MetricError for an
/// empty class list or when every listed class is skipped.
double mean_topk_recall(const Distributions& preds, const std::vector<int>& labels, std::size_t k,
                        const std::vector<int>& classes, std::vector<int>* skipped = nullptr);

/// Macro top-1 accuracy over the classes present in `labels`.
double mean_class_accuracy(const Distributions& preds, const std::vector<int>& labels);
/// Same over hard predictions.
double mean_class_accuracy(const std::vector<int>& predicted, const std::vector<int>& labels);

}  // namespace srl
