// SPDX-License-Identifier: Apache-2.0
//
// Named parameter storage and the per-forward-pass binding of parameters to
// graph leaves.

#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "srl/tensor.hpp"

namespace srl {

using ParamId = std::size_t;

struct Parameter {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Gradients aligned index-for-index with a ParamSet.
using GradientSet = std::vector<std::vector<double>>;

class ParamSet {
 public:
  /// Registers a zero-initialized parameter. Names must be unique.
  ParamId add(std::string name, Shape shape);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](ParamId id) { return params_[id]; }
  const Parameter& operator[](ParamId id) const { return params_[id]; }
  const std::vector<Parameter>& all() const noexcept { return params_; }
  std::vector<Parameter>& all() noexcept { return params_; }

  /// Throws InputError for unknown names.
  ParamId find(const std::string& name) const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for matrices (fan_in = rows),
  /// zero for vectors.
  void init_uniform(std::mt19937_64& rng);

  GradientSet zero_gradients() const;
  std::size_t scalar_count() const;

 private:
  std::vector<Parameter> params_;
};

/// Binds parameters into one Graph on first use, so parameters that never
/// enter the computation keep an exactly-zero gradient.
class Scope {
 public:
  Scope(Graph& graph, const ParamSet& params);

  Graph& graph() noexcept { return graph_; }
  const ParamSet& params() const noexcept { return params_; }

  Tensor param(ParamId id);
  Tensor constant(Shape shape, std::vector<double> values) {
    return graph_.constant(std::move(shape), std::move(values));
  }

  /// Copies the gradients of bound parameters out of the graph (after
  /// Graph::backward). Unbound parameters receive zeros.
  GradientSet gradients() const;
  /// Adds the gradients of bound parameters into `out`.
  void accumulate_gradients(GradientSet& out) const;
  /// Gradients of bound parameters; unbound entries are left empty.
  GradientSet sparse_gradients() const;

 private:
  Graph& graph_;
  const ParamSet& params_;
  std::vector<Tensor> bound_;
};

/// dst += src for every non-empty entry of src, in index order.
void accumulate_sparse(GradientSet& dst, const GradientSet& src);

}  // namespace srl
