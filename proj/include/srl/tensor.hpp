// SPDX-License-Identifier: Apache-2.0
//
// Define-by-run reverse-mode automatic differentiation over dense f64 arrays.
//
// A Graph owns every node created during one forward pass. Tensors are cheap
// handles (graph pointer + node id). Nodes are appended in creation order, so
// the node vector is already a topological order and backward() simply walks
// it in reverse. No implicit broadcasting: binary elementwise ops require
// identical shapes; only scale() mixes a scalar with an array.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace srl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

class Graph;

class Tensor {
 public:
  Tensor() = default;

  bool valid() const noexcept { return graph_ != nullptr; }
  Graph* graph() const noexcept { return graph_; }
  int node_id() const noexcept { return id_; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::span<const double> values() const;
  /// Zero-filled span for nodes backward() never reached.
  std::span<const double> grad() const;
  /// Value of a single-element tensor.
  double item() const;
  bool requires_grad() const;

 private:
  friend class Graph;
  Tensor(Graph* g, int id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

enum class OpKind : std::uint8_t {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Sigmoid,
  Tanh,
  Exp,
  Log,
  Concat,
  Dot,
  Sum,
  Softmax,
  NegLogPick,
  SoftmaxXent,
  CosineRows,
  MeanRows,
  MaxRows,
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Differentiable leaf (a parameter view for this pass).
  Tensor variable(Shape shape, std::vector<double> values);
  /// Non-differentiable leaf; backward never writes into it.
  Tensor constant(Shape shape, std::vector<double> values);

  /// Populates grad of every node that requires it. Re-running backward
  /// recomputes all gradients from scratch.
  void backward(const Tensor& loss);

  std::size_t node_count() const noexcept { return nodes_.size(); }

  // Ops are free functions below; they append through this hook.
  struct Node {
    OpKind op = OpKind::Leaf;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    int in0 = -1;
    int in1 = -1;
    double scalar = 0.0;     // Scale factor / NegLogPick clamp
    std::size_t index = 0;   // picked label, concat split, row count
    bool requires_grad = false;
  };

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  Tensor append(Node node);

 private:
  friend class Tensor;
  void backward_node(const Node& n);
  std::vector<double>& grad_of(int id);

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

// ---------------------------------------------------------------------------
// Operations. All operands must live in the same Graph.

/// Matrix product. Rank-1 left operands act as row vectors and rank-1 right
/// operands as column vectors; the corresponding output dimension is dropped.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
/// Throws DomainError carrying the first non-positive index.
Tensor log(const Tensor& a);

/// Rank-1 concatenation.
Tensor concat(const Tensor& a, const Tensor& b);
/// Scalar inner product of two equal-length vectors.
Tensor dot(const Tensor& a, const Tensor& b);
/// Sum of all entries, as a scalar.
Tensor sum(const Tensor& a);
/// Max-shifted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& z);

/// -log(max(probs[label], clamp)). The gradient vanishes while clamped.
Tensor neg_log_pick(const Tensor& probs, std::size_t label, double clamp);
/// logsumexp(logits) - logits[label], i.e. cross entropy of softmax(logits).
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t label);

/// Row-wise cosine similarity of an [o x d] matrix with a [d] vector. A row or
/// query with zero norm yields similarity 0 and passes no gradient.
Tensor cosine_rows(const Tensor& rows, const Tensor& query);
/// Column-wise mean / max of an [o x d] matrix, returning [d].
Tensor mean_rows(const Tensor& rows);
Tensor max_rows(const Tensor& rows);

}  // namespace srl
