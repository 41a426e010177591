// SPDX-License-Identifier: Apache-2.0

#include "srl/params.hpp"

#include <algorithm>
#include <cmath>

#include "srl/errors.hpp"

namespace srl {

ParamId ParamSet::add(std::string name, Shape shape) {
  for (const auto& p : params_) {
    if (p.name == name) throw ParameterError("duplicate parameter name " + name);
  }
  Parameter p;
  p.values.assign(shape_size(shape), 0.0);
  p.name = std::move(name);
  p.shape = std::move(shape);
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

ParamId ParamSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw InputError("unknown parameter " + name);
}

void ParamSet::init_uniform(std::mt19937_64& rng) {
  for (auto& p : params_) {
    if (p.shape.size() < 2) {
      std::fill(p.values.begin(), p.values.end(), 0.0);
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.shape[0]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.values) v = dist(rng);
  }
}

GradientSet ParamSet::zero_gradients() const {
  GradientSet g(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) g[i].assign(params_[i].values.size(), 0.0);
  return g;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.values.size();
  return n;
}

Scope::Scope(Graph& graph, const ParamSet& params)
    : graph_(graph), params_(params), bound_(params.size()) {}

Tensor Scope::param(ParamId id) {
  if (id >= bound_.size()) throw IndexError("parameter id out of range");
  if (!bound_[id].valid()) {
    const auto& p = params_[id];
    bound_[id] = graph_.variable(p.shape, p.values);
  }
  return bound_[id];
}

GradientSet Scope::gradients() const {
  GradientSet out = params_.zero_gradients();
  accumulate_gradients(out);
  return out;
}

void Scope::accumulate_gradients(GradientSet& out) const {
  if (out.size() != bound_.size()) throw StateError("gradient set does not match parameters");
  for (std::size_t i = 0; i < bound_.size(); ++i) {
    if (!bound_[i].valid()) continue;
    const auto g = bound_[i].grad();
    auto& dst = out[i];
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  }
}

GradientSet Scope::sparse_gradients() const {
  GradientSet out(bound_.size());
  for (std::size_t i = 0; i < bound_.size(); ++i) {
    if (!bound_[i].valid()) continue;
    const auto g = bound_[i].grad();
    out[i].assign(g.begin(), g.end());
  }
  return out;
}

void accumulate_sparse(GradientSet& dst, const GradientSet& src) {
  if (dst.size() != src.size()) throw StateError("gradient set does not match parameters");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].empty()) continue;
    auto& d = dst[i];
    for (std::size_t k = 0; k < src[i].size(); ++k) d[k] += src[i][k];
  }
}

}  // namespace srl
