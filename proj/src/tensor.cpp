// SPDX-License-Identifier: Apache-2.0

#include "srl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "srl/errors.hpp"

namespace srl {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

const Shape& Tensor::shape() const { return graph_->node(id_).shape; }

std::size_t Tensor::size() const { return graph_->node(id_).value.size(); }

std::span<const double> Tensor::values() const { return graph_->node(id_).value; }

std::span<const double> Tensor::grad() const {
  const auto& n = graph_->node(id_);
  if (!n.grad.empty() || n.value.empty()) return n.grad;
  thread_local std::vector<double> zeros;
  if (zeros.size() < n.value.size()) zeros.assign(n.value.size(), 0.0);
  return {zeros.data(), n.value.size()};
}

double Tensor::item() const {
  const auto& v = graph_->node(id_).value;
  if (v.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return v[0];
}

bool Tensor::requires_grad() const { return graph_->node(id_).requires_grad; }

// ---------------------------------------------------------------------------
// Graph

namespace {

void check_leaf(const Shape& shape, const std::vector<double>& values) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("leaf shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
}

}  // namespace

Tensor Graph::variable(Shape shape, std::vector<double> values) {
  check_leaf(shape, values);
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  n.requires_grad = true;
  return append(std::move(n));
}

Tensor Graph::constant(Shape shape, std::vector<double> values) {
  check_leaf(shape, values);
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(values);
  return append(std::move(n));
}

Tensor Graph::append(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

std::vector<double>& Graph::grad_of(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }

void Graph::backward(const Tensor& loss) {
  if (loss.graph() != this) throw InputError("backward: loss belongs to another graph");
  const Node& root = node(loss.node_id());
  if (root.value.size() != 1 || !root.shape.empty()) {
    throw ShapeError("backward requires a scalar loss, got shape " + shape_str(root.shape));
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) {
      n.grad.assign(n.value.size(), 0.0);
    } else {
      n.grad.clear();
    }
  }
  has_grads_ = true;
  if (!root.requires_grad) return;
  nodes_[static_cast<std::size_t>(loss.node_id())].grad[0] = 1.0;
  for (auto i = static_cast<std::ptrdiff_t>(loss.node_id()); i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.op == OpKind::Leaf || !n.requires_grad) continue;
    backward_node(n);
  }
}

namespace {

struct MatDims {
  std::size_t m, k, n;
};

MatDims matmul_dims(const Shape& a, const Shape& b) {
  const bool a_vec = a.size() == 1;
  const bool b_vec = b.size() == 1;
  if (a.empty() || a.size() > 2 || b.empty() || b.size() > 2) {
    throw ShapeError("matmul expects rank-1 or rank-2 operands, got " + shape_str(a) + " and " +
                     shape_str(b));
  }
  MatDims d{};
  d.m = a_vec ? 1 : a[0];
  const std::size_t ka = a_vec ? a[0] : a[1];
  const std::size_t kb = b[0];
  d.n = b_vec ? 1 : b[1];
  if (ka != kb) {
    throw DimensionError("matmul inner dimensions differ: " + shape_str(a) + " x " + shape_str(b));
  }
  d.k = ka;
  return d;
}

}  // namespace

void Graph::backward_node(const Node& n) {
  const std::vector<double>& g = n.grad;
  const Node& a = nodes_[static_cast<std::size_t>(n.in0)];
  const bool ga = a.requires_grad;
  const bool has_b = n.in1 >= 0;
  const bool gb = has_b && nodes_[static_cast<std::size_t>(n.in1)].requires_grad;

  switch (n.op) {
    case OpKind::Leaf:
      break;
    case OpKind::MatMul: {
      const Node& b = nodes_[static_cast<std::size_t>(n.in1)];
      const auto dims = matmul_dims(a.shape, b.shape);
      if (ga) {
        auto& da = grad_of(n.in0);
        for (std::size_t i = 0; i < dims.m; ++i) {
          const double* gi = g.data() + i * dims.n;
          for (std::size_t k = 0; k < dims.k; ++k) {
            const double* bk = b.value.data() + k * dims.n;
            double acc = 0.0;
            for (std::size_t j = 0; j < dims.n; ++j) acc += gi[j] * bk[j];
            da[i * dims.k + k] += acc;
          }
        }
      }
      if (gb) {
        auto& db = grad_of(n.in1);
        for (std::size_t i = 0; i < dims.m; ++i) {
          const double* gi = g.data() + i * dims.n;
          for (std::size_t k = 0; k < dims.k; ++k) {
            const double aik = a.value[i * dims.k + k];
            double* dbk = db.data() + k * dims.n;
            for (std::size_t j = 0; j < dims.n; ++j) dbk[j] += aik * gi[j];
          }
        }
      }
      break;
    }
    case OpKind::Add: {
      if (ga) {
        auto& da = grad_of(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (gb) {
        auto& db = grad_of(n.in1);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
      }
      break;
    }
    case OpKind::Sub: {
      if (ga) {
        auto& da = grad_of(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
      }
      if (gb) {
        auto& db = grad_of(n.in1);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
      }
      break;
    }
    case OpKind::Mul: {
      const Node& b = nodes_[static_cast<std::size_t>(n.in1)];
      if (ga) {
        auto& da = grad_of(n.in0);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * b.value[i];
      }
      if (gb) {
        auto& db = grad_of(n.in1);
        for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * a.value[i];
      }
      break;
    }
    case OpKind::Scale: {
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.scalar * g[i];
      break;
    }
    case OpKind::Sigmoid: {
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        da[i] += g[i] * y * (1.0 - y);
      }
      break;
    }
    case OpKind::Tanh: {
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double y = n.value[i];
        da[i] += g[i] * (1.0 - y * y);
      }
      break;
    }
    case OpKind::Exp: {
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * n.value[i];
      break;
    }
    case OpKind::Log: {
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / a.value[i];
      break;
    }
    case OpKind::Concat: {
      const std::size_t split = n.index;
      if (ga) {
        auto& da = grad_of(n.in0);
        for (std::size_t i = 0; i < split; ++i) da[i] += g[i];
      }
      if (gb) {
        auto& db = grad_of(n.in1);
        for (std::size_t i = split; i < g.size(); ++i) db[i - split] += g[i];
      }
      break;
    }
    case OpKind::Dot: {
      const Node& b = nodes_[static_cast<std::size_t>(n.in1)];
      const double g0 = g[0];
      if (ga) {
        auto& da = grad_of(n.in0);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += g0 * b.value[i];
      }
      if (gb) {
        auto& db = grad_of(n.in1);
        for (std::size_t i = 0; i < db.size(); ++i) db[i] += g0 * a.value[i];
      }
      break;
    }
    case OpKind::Sum: {
      auto& da = grad_of(n.in0);
      for (auto& v : da) v += g[0];
      break;
    }
    case OpKind::Softmax: {
      double inner = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * n.value[i];
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += n.value[i] * (g[i] - inner);
      break;
    }
    case OpKind::NegLogPick: {
      const double p = a.value[n.index];
      if (p >= n.scalar) grad_of(n.in0)[n.index] -= g[0] / p;
      break;
    }
    case OpKind::SoftmaxXent: {
      const auto& z = a.value;
      const double mx = *std::max_element(z.begin(), z.end());
      double denom = 0.0;
      for (double v : z) denom += std::exp(v - mx);
      auto& da = grad_of(n.in0);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double p = std::exp(z[i] - mx) / denom;
        da[i] += g[0] * (p - (i == n.index ? 1.0 : 0.0));
      }
      break;
    }
    case OpKind::CosineRows: {
      const Node& q = nodes_[static_cast<std::size_t>(n.in1)];
      const std::size_t rows = n.shape[0];
      const std::size_t d = q.value.size();
      double qn2 = 0.0;
      for (double v : q.value) qn2 += v * v;
      const double qn = std::sqrt(qn2);
      if (qn == 0.0) break;
      std::vector<double>* dr = ga ? &grad_of(n.in0) : nullptr;
      std::vector<double>* dq = gb ? &grad_of(n.in1) : nullptr;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* row = a.value.data() + r * d;
        double rn2 = 0.0;
        double dp = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          rn2 += row[c] * row[c];
          dp += row[c] * q.value[c];
        }
        if (rn2 == 0.0) continue;
        const double rn = std::sqrt(rn2);
        const double s = dp / (rn * qn);
        const double gr = g[r];
        if (dq) {
          for (std::size_t c = 0; c < d; ++c) {
            (*dq)[c] += gr * (row[c] / (rn * qn) - s * q.value[c] / qn2);
          }
        }
        if (dr) {
          for (std::size_t c = 0; c < d; ++c) {
            (*dr)[r * d + c] += gr * (q.value[c] / (rn * qn) - s * row[c] / rn2);
          }
        }
      }
      break;
    }
    case OpKind::MeanRows: {
      const std::size_t rows = a.shape[0];
      const std::size_t d = a.shape[1];
      auto& da = grad_of(n.in0);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < d; ++c) da[r * d + c] += g[c] / static_cast<double>(rows);
      }
      break;
    }
    case OpKind::MaxRows: {
      const std::size_t rows = a.shape[0];
      const std::size_t d = a.shape[1];
      auto& da = grad_of(n.in0);
      for (std::size_t c = 0; c < d; ++c) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < rows; ++r) {
          if (a.value[r * d + c] > a.value[best * d + c]) best = r;
        }
        da[best * d + c] += g[c];
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Ops

namespace {

Graph& same_graph(const Tensor& a, const Tensor& b) {
  if (!a.valid() || !b.valid()) throw InputError("operation on an empty tensor handle");
  if (a.graph() != b.graph()) throw InputError("operands belong to different graphs");
  return *a.graph();
}

Graph& graph_of(const Tensor& a) {
  if (!a.valid()) throw InputError("operation on an empty tensor handle");
  return *a.graph();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_vector(const char* op, const Tensor& a) {
  if (a.rank() != 1) {
    throw ShapeError(std::string(op) + " expects a rank-1 tensor, got " + shape_str(a.shape()));
  }
}

Graph::Node unary_node(OpKind op, const Tensor& a) {
  Graph::Node n;
  n.op = op;
  n.shape = a.shape();
  n.in0 = a.node_id();
  n.requires_grad = a.requires_grad();
  return n;
}

Graph::Node binary_node(OpKind op, const Tensor& a, const Tensor& b, Shape shape) {
  Graph::Node n;
  n.op = op;
  n.shape = std::move(shape);
  n.in0 = a.node_id();
  n.in1 = b.node_id();
  n.requires_grad = a.requires_grad() || b.requires_grad();
  return n;
}

template <typename F>
Tensor map_unary(OpKind op, const Tensor& a, F f) {
  Graph& g = graph_of(a);
  auto n = unary_node(op, a);
  const auto src = a.values();
  n.value.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) n.value[i] = f(src[i]);
  return g.append(std::move(n));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b);
  const auto dims = matmul_dims(a.shape(), b.shape());
  Shape out;
  if (a.rank() == 2) out.push_back(dims.m);
  if (b.rank() == 2) out.push_back(dims.n);
  auto n = binary_node(OpKind::MatMul, a, b, std::move(out));
  n.value.assign(dims.m * dims.n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < dims.m; ++i) {
    double* ci = n.value.data() + i * dims.n;
    for (std::size_t k = 0; k < dims.k; ++k) {
      const double aik = av[i * dims.k + k];
      const double* bk = bv.data() + k * dims.n;
      for (std::size_t j = 0; j < dims.n; ++j) ci[j] += aik * bk[j];
    }
  }
  return g.append(std::move(n));
}

Tensor add(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b);
  require_same_shape("add", a, b);
  auto n = binary_node(OpKind::Add, a, b, a.shape());
  const auto av = a.values();
  const auto bv = b.values();
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] + bv[i];
  return g.append(std::move(n));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b);
  require_same_shape("sub", a, b);
  auto n = binary_node(OpKind::Sub, a, b, a.shape());
  const auto av = a.values();
  const auto bv = b.values();
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] - bv[i];
  return g.append(std::move(n));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b);
  require_same_shape("mul", a, b);
  auto n = binary_node(OpKind::Mul, a, b, a.shape());
  const auto av = a.values();
  const auto bv = b.values();
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] * bv[i];
  return g.append(std::move(n));
}

Tensor scale(const Tensor& a, double factor) {
  Graph& g = graph_of(a);
  auto n = unary_node(OpKind::Scale, a);
  n.scalar = factor;
  const auto av = a.values();
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = factor * av[i];
  return g.append(std::move(n));
}

Tensor sigmoid(const Tensor& a) {
  return map_unary(OpKind::Sigmoid, a, [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
}

Tensor tanh(const Tensor& a) {
  return map_unary(OpKind::Tanh, a, [](double x) { return std::tanh(x); });
}

Tensor exp(const Tensor& a) {
  return map_unary(OpKind::Exp, a, [](double x) { return std::exp(x); });
}

Tensor log(const Tensor& a) {
  const auto av = a.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!(av[i] > 0.0)) throw DomainError("log of non-positive value", i);
  }
  return map_unary(OpKind::Log, a, [](double x) { return std::log(x); });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b);
  require_vector("concat", a);
  require_vector("concat", b);
  auto n = binary_node(OpKind::Concat, a, b, Shape{a.size() + b.size()});
  n.index = a.size();
  n.value.reserve(a.size() + b.size());
  const auto av = a.values();
  const auto bv = b.values();
  n.value.insert(n.value.end(), av.begin(), av.end());
  n.value.insert(n.value.end(), bv.begin(), bv.end());
  return g.append(std::move(n));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  Graph& g = same_graph(a, b);
  require_vector("dot", a);
  require_vector("dot", b);
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths differ " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
  auto n = binary_node(OpKind::Dot, a, b, Shape{});
  const auto av = a.values();
  const auto bv = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  n.value = {acc};
  return g.append(std::move(n));
}

Tensor sum(const Tensor& a) {
  Graph& g = graph_of(a);
  auto n = unary_node(OpKind::Sum, a);
  n.shape = {};
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  n.value = {acc};
  return g.append(std::move(n));
}

Tensor softmax(const Tensor& z) {
  Graph& g = graph_of(z);
  require_vector("softmax", z);
  const auto zv = z.values();
  if (zv.empty()) throw InputError("softmax of an empty vector");
  for (double v : zv) {
    if (std::isnan(v)) throw NumericError("softmax input contains NaN");
  }
  auto n = unary_node(OpKind::Softmax, z);
  const double mx = *std::max_element(zv.begin(), zv.end());
  n.value.resize(zv.size());
  double denom = 0.0;
  for (std::size_t i = 0; i < zv.size(); ++i) {
    n.value[i] = std::exp(zv[i] - mx);
    denom += n.value[i];
  }
  for (auto& v : n.value) v /= denom;
  return g.append(std::move(n));
}

Tensor neg_log_pick(const Tensor& probs, std::size_t label, double clamp) {
  Graph& g = graph_of(probs);
  require_vector("neg_log_pick", probs);
  if (label >= probs.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  auto n = unary_node(OpKind::NegLogPick, probs);
  n.shape = {};
  n.index = label;
  n.scalar = clamp;
  n.value = {-std::log(std::max(probs.values()[label], clamp))};
  return g.append(std::move(n));
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label) {
  Graph& g = graph_of(logits);
  require_vector("softmax_cross_entropy", logits);
  const auto z = logits.values();
  if (label >= z.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(z.size()) + " logits");
  }
  for (double v : z) {
    if (std::isnan(v)) throw NumericError("softmax_cross_entropy input contains NaN");
  }
  auto n = unary_node(OpKind::SoftmaxXent, logits);
  n.shape = {};
  n.index = label;
  const double mx = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (double v : z) denom += std::exp(v - mx);
  n.value = {(mx - z[label]) + std::log(denom)};
  return g.append(std::move(n));
}

Tensor cosine_rows(const Tensor& rows, const Tensor& query) {
  Graph& g = same_graph(rows, query);
  require_vector("cosine_rows", query);
  if (rows.rank() != 2 || rows.shape()[1] != query.size()) {
    throw DimensionError("cosine_rows: " + shape_str(rows.shape()) + " vs " +
                         shape_str(query.shape()));
  }
  const std::size_t o = rows.shape()[0];
  const std::size_t d = query.size();
  auto n = binary_node(OpKind::CosineRows, rows, query, Shape{o});
  n.value.assign(o, 0.0);
  const auto rv = rows.values();
  const auto qv = query.values();
  double qn2 = 0.0;
  for (double v : qv) qn2 += v * v;
  if (qn2 > 0.0) {
    const double qn = std::sqrt(qn2);
    for (std::size_t r = 0; r < o; ++r) {
      double rn2 = 0.0;
      double dp = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        rn2 += rv[r * d + c] * rv[r * d + c];
        dp += rv[r * d + c] * qv[c];
      }
      if (rn2 == 0.0) continue;
      n.value[r] = std::clamp(dp / (std::sqrt(rn2) * qn), -1.0, 1.0);
    }
  }
  return g.append(std::move(n));
}

Tensor mean_rows(const Tensor& rows) {
  Graph& g = graph_of(rows);
  if (rows.rank() != 2 || rows.shape()[0] == 0) {
    throw ShapeError("mean_rows expects a non-empty matrix, got " + shape_str(rows.shape()));
  }
  const std::size_t o = rows.shape()[0];
  const std::size_t d = rows.shape()[1];
  auto n = unary_node(OpKind::MeanRows, rows);
  n.shape = {d};
  n.value.assign(d, 0.0);
  const auto rv = rows.values();
  for (std::size_t r = 0; r < o; ++r) {
    for (std::size_t c = 0; c < d; ++c) n.value[c] += rv[r * d + c];
  }
  for (auto& v : n.value) v /= static_cast<double>(o);
  return g.append(std::move(n));
}

Tensor max_rows(const Tensor& rows) {
  Graph& g = graph_of(rows);
  if (rows.rank() != 2 || rows.shape()[0] == 0) {
    throw ShapeError("max_rows expects a non-empty matrix, got " + shape_str(rows.shape()));
  }
  const std::size_t o = rows.shape()[0];
  const std::size_t d = rows.shape()[1];
  auto n = unary_node(OpKind::MaxRows, rows);
  n.shape = {d};
  const auto rv = rows.values();
  n.value.assign(rv.begin(), rv.begin() + static_cast<std::ptrdiff_t>(d));
  for (std::size_t r = 1; r < o; ++r) {
    for (std::size_t c = 0; c < d; ++c) n.value[c] = std::max(n.value[c], rv[r * d + c]);
  }
  return g.append(std::move(n));
}

}  // namespace srl
