#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "attnex/dense_array.hpp"
#include "attnex/projections.hpp"

namespace attnex {

using NodeId = std::size_t;

enum class OpKind {
  Leaf,
  MatMul,
  Add,
  Sub,
  Mul,
  Scale,
  Tanh,
  Sigmoid,
  Relu,
  Exp,
  Log,
  Sum,
  Slice,
  Column,
  Concat,
  Reshape,
  Transpose,
  GatherCols,
  StackCols,
  L2Norm,
  Projection,
  ColwiseAdd,
  SoftmaxCols,
  LayerNormCols,
  BceWithLogits,
  AbsDiff,
  JsdRef,
};

/// One recorded primitive: kind, parent ids, forward value, whatever the
/// backward rule needs, and the gradient accumulator filled by backward().
struct TapeNode {
  OpKind op = OpKind::Leaf;
  std::vector<NodeId> parents;
  DenseArray value;
  DenseArray grad;

  double scalar_aux = 0.0;                // scale factor / label / target
  std::size_t index_aux0 = 0;             // slice begin / column index
  std::size_t index_aux1 = 0;             // slice end
  std::vector<std::size_t> indices;       // GatherCols column ids
  ProjectionKind projection_kind;         // Projection nodes
  std::vector<std::size_t> support;       // Projection nodes
  DenseArray reference;                   // JsdRef nodes
};

/// Define-by-run differentiation record. Nodes are appended in topological
/// order (parents always precede children), so backward() is a single
/// reverse sweep. A tape is built and differentiated by one execution
/// context; recorded values are immutable.
class Tape {
 public:
  NodeId leaf(DenseArray value);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId relu(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId sum(NodeId a);
  NodeId slice(NodeId a, std::size_t begin, std::size_t end);
  NodeId column(NodeId a, std::size_t c);
  NodeId concat(NodeId a, NodeId b);
  NodeId reshape(NodeId a, std::vector<std::size_t> shape);
  NodeId transpose(NodeId a);
  /// out[:, i] = source[:, ids[i]]; repeated ids accumulate on backward.
  NodeId gather_cols(NodeId source, std::vector<std::size_t> ids);
  /// Stack k same-length vectors as the columns of a matrix.
  NodeId stack_cols(std::span<const NodeId> columns);
  NodeId l2norm(NodeId a);
  NodeId projection(NodeId scores, const ProjectionKind& kind);
  NodeId colwise_add(NodeId m, NodeId bias);
  NodeId softmax_cols(NodeId m);
  NodeId layer_norm_cols(NodeId x, NodeId gamma, NodeId beta);
  NodeId bce_with_logits(NodeId logit, double label);
  NodeId abs_diff(NodeId x, double target);
  NodeId jsd_vs_reference(NodeId p, DenseArray reference);

  /// Generic entry point for the kinds fully determined by (kind, inputs).
  NodeId apply(OpKind kind, std::span<const NodeId> inputs);

  /// Reverse sweep from a scalar root. Gradients are zeroed first and
  /// accumulate additively across fan-out; leaves off any path to the root
  /// keep a zero gradient. May be called repeatedly with different roots.
  void backward(NodeId root);

  const DenseArray& value(NodeId id) const { return nodes_[id].value; }
  const DenseArray& grad(NodeId id) const { return nodes_[id].grad; }
  const TapeNode& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

 private:
  NodeId push(TapeNode node);
  std::vector<TapeNode> nodes_;
};

}  // namespace attnex
