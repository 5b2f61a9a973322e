#include "attnex/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace attnex {

namespace {

constexpr double kLayerNormEps = 1e-5;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument("tape: " + message);
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

NodeId Tape::push(TapeNode node) {
  for (NodeId p : node.parents) {
    if (p >= nodes_.size()) {
      throw std::logic_error("tape: parent created after child (cycle?)");
    }
  }
  if (!node.value.all_finite()) {
    throw std::runtime_error("tape: non-finite result from primitive");
  }
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

NodeId Tape::leaf(DenseArray value) {
  TapeNode n;
  n.op = OpKind::Leaf;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  const DenseArray& A = nodes_[a].value;
  const DenseArray& B = nodes_[b].value;
  require(A.is_matrix(), "matmul: left operand must be rank 2");
  require(B.is_matrix() || B.is_vector(), "matmul: bad right operand");
  const std::size_t m = A.rows();
  const std::size_t k = A.cols();
  require(B.rows() == k, "matmul: inner dimensions differ (" +
                             A.shape_string() + " * " + B.shape_string() + ")");
  TapeNode n;
  n.op = OpKind::MatMul;
  n.parents = {a, b};
  if (B.is_vector()) {
    DenseArray out({m});
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += A.at(i, j) * B[j];
      out[i] = acc;
    }
    n.value = std::move(out);
  } else {
    const std::size_t c = B.cols();
    DenseArray out({m, c});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double aij = A.at(i, j);
        if (aij == 0.0) continue;
        for (std::size_t l = 0; l < c; ++l) {
          out.at(i, l) += aij * B.at(j, l);
        }
      }
    }
    n.value = std::move(out);
  }
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const DenseArray& A = nodes_[a].value;
  const DenseArray& B = nodes_[b].value;
  require(A.same_shape(B), "add: shape mismatch");
  TapeNode n;
  n.op = OpKind::Add;
  n.parents = {a, b};
  n.value = A;
  for (std::size_t i = 0; i < B.size(); ++i) n.value[i] += B[i];
  return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
  const DenseArray& A = nodes_[a].value;
  const DenseArray& B = nodes_[b].value;
  require(A.same_shape(B), "sub: shape mismatch");
  TapeNode n;
  n.op = OpKind::Sub;
  n.parents = {a, b};
  n.value = A;
  for (std::size_t i = 0; i < B.size(); ++i) n.value[i] -= B[i];
  return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
  const DenseArray& A = nodes_[a].value;
  const DenseArray& B = nodes_[b].value;
  require(A.same_shape(B), "mul: shape mismatch");
  TapeNode n;
  n.op = OpKind::Mul;
  n.parents = {a, b};
  n.value = A;
  for (std::size_t i = 0; i < B.size(); ++i) n.value[i] *= B[i];
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  TapeNode n;
  n.op = OpKind::Scale;
  n.parents = {a};
  n.scalar_aux = factor;
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) n.value[i] *= factor;
  return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
  TapeNode n;
  n.op = OpKind::Tanh;
  n.parents = {a};
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = std::tanh(n.value[i]);
  }
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  TapeNode n;
  n.op = OpKind::Sigmoid;
  n.parents = {a};
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = stable_sigmoid(n.value[i]);
  }
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  TapeNode n;
  n.op = OpKind::Relu;
  n.parents = {a};
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = std::max(n.value[i], 0.0);
  }
  return push(std::move(n));
}

NodeId Tape::exp(NodeId a) {
  TapeNode n;
  n.op = OpKind::Exp;
  n.parents = {a};
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = std::exp(n.value[i]);
  }
  return push(std::move(n));
}

NodeId Tape::log(NodeId a) {
  TapeNode n;
  n.op = OpKind::Log;
  n.parents = {a};
  n.value = nodes_[a].value;
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.value[i] = std::log(n.value[i]);
  }
  return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
  TapeNode n;
  n.op = OpKind::Sum;
  n.parents = {a};
  n.value = DenseArray::scalar(nodes_[a].value.sum());
  return push(std::move(n));
}

NodeId Tape::slice(NodeId a, std::size_t begin, std::size_t end) {
  const DenseArray& A = nodes_[a].value;
  require(begin < end, "slice: empty range");
  TapeNode n;
  n.op = OpKind::Slice;
  n.parents = {a};
  n.index_aux0 = begin;
  n.index_aux1 = end;
  if (A.is_vector()) {
    require(end <= A.size(), "slice: out of range");
    DenseArray out({end - begin});
    for (std::size_t i = begin; i < end; ++i) out[i - begin] = A[i];
    n.value = std::move(out);
  } else {
    require(A.is_matrix() && end <= A.rows(), "slice: out of range");
    DenseArray out({end - begin, A.cols()});
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < A.cols(); ++c) {
        out.at(r - begin, c) = A.at(r, c);
      }
    }
    n.value = std::move(out);
  }
  return push(std::move(n));
}

NodeId Tape::column(NodeId a, std::size_t c) {
  const DenseArray& A = nodes_[a].value;
  require(A.is_matrix() && c < A.cols(), "column: out of range");
  TapeNode n;
  n.op = OpKind::Column;
  n.parents = {a};
  n.index_aux0 = c;
  n.value = A.column(c);
  return push(std::move(n));
}

NodeId Tape::concat(NodeId a, NodeId b) {
  const DenseArray& A = nodes_[a].value;
  const DenseArray& B = nodes_[b].value;
  require(A.is_vector() && B.is_vector(), "concat: vectors required");
  TapeNode n;
  n.op = OpKind::Concat;
  n.parents = {a, b};
  DenseArray out({A.size() + B.size()});
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i];
  for (std::size_t i = 0; i < B.size(); ++i) out[A.size() + i] = B[i];
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Tape::reshape(NodeId a, std::vector<std::size_t> shape) {
  const DenseArray& A = nodes_[a].value;
  TapeNode n;
  n.op = OpKind::Reshape;
  n.parents = {a};
  n.value = DenseArray(std::move(shape),
                       std::vector<double>(A.data().begin(), A.data().end()));
  return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
  const DenseArray& A = nodes_[a].value;
  require(A.is_matrix(), "transpose: matrix required");
  TapeNode n;
  n.op = OpKind::Transpose;
  n.parents = {a};
  DenseArray out({A.cols(), A.rows()});
  for (std::size_t r = 0; r < A.rows(); ++r) {
    for (std::size_t c = 0; c < A.cols(); ++c) out.at(c, r) = A.at(r, c);
  }
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Tape::gather_cols(NodeId source, std::vector<std::size_t> ids) {
  const DenseArray& S = nodes_[source].value;
  require(S.is_matrix(), "gather_cols: matrix required");
  require(!ids.empty(), "gather_cols: empty index list");
  for (std::size_t c : ids) {
    require(c < S.cols(), "gather_cols: column index " + std::to_string(c) +
                              " out of range for " + S.shape_string());
  }
  TapeNode n;
  n.op = OpKind::GatherCols;
  n.parents = {source};
  DenseArray out({S.rows(), ids.size()});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t r = 0; r < S.rows(); ++r) {
      out.at(r, i) = S.at(r, ids[i]);
    }
  }
  n.indices = std::move(ids);
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Tape::stack_cols(std::span<const NodeId> columns) {
  require(!columns.empty(), "stack_cols: no columns");
  const std::size_t rows = nodes_[columns[0]].value.size();
  for (NodeId c : columns) {
    require(nodes_[c].value.is_vector() && nodes_[c].value.size() == rows,
            "stack_cols: columns must be same-length vectors");
  }
  TapeNode n;
  n.op = OpKind::StackCols;
  n.parents.assign(columns.begin(), columns.end());
  DenseArray out({rows, columns.size()});
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const DenseArray& v = nodes_[columns[i]].value;
    for (std::size_t r = 0; r < rows; ++r) out.at(r, i) = v[r];
  }
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId Tape::l2norm(NodeId a) {
  TapeNode n;
  n.op = OpKind::L2Norm;
  n.parents = {a};
  n.value = DenseArray::scalar(nodes_[a].value.l2_norm());
  return push(std::move(n));
}

NodeId Tape::projection(NodeId scores, const ProjectionKind& kind) {
  const DenseArray& z = nodes_[scores].value;
  require(z.is_vector(), "projection: vector required");
  SimplexPoint point = project(kind, z);
  TapeNode n;
  n.op = OpKind::Projection;
  n.parents = {scores};
  n.projection_kind = kind;
  n.support = std::move(point.support);
  n.value = std::move(point.p);
  return push(std::move(n));
}

NodeId Tape::colwise_add(NodeId m, NodeId bias) {
  const DenseArray& M = nodes_[m].value;
  const DenseArray& b = nodes_[bias].value;
  require(M.is_matrix() && b.is_vector() && b.size() == M.rows(),
          "colwise_add: shape mismatch");
  TapeNode n;
  n.op = OpKind::ColwiseAdd;
  n.parents = {m, bias};
  n.value = M;
  for (std::size_t r = 0; r < M.rows(); ++r) {
    for (std::size_t c = 0; c < M.cols(); ++c) n.value.at(r, c) += b[r];
  }
  return push(std::move(n));
}

NodeId Tape::softmax_cols(NodeId m) {
  const DenseArray& M = nodes_[m].value;
  require(M.is_matrix(), "softmax_cols: matrix required");
  TapeNode n;
  n.op = OpKind::SoftmaxCols;
  n.parents = {m};
  n.value = M;
  for (std::size_t c = 0; c < M.cols(); ++c) {
    double mx = M.at(0, c);
    for (std::size_t r = 1; r < M.rows(); ++r) mx = std::max(mx, M.at(r, c));
    double total = 0.0;
    for (std::size_t r = 0; r < M.rows(); ++r) {
      n.value.at(r, c) = std::exp(M.at(r, c) - mx);
      total += n.value.at(r, c);
    }
    for (std::size_t r = 0; r < M.rows(); ++r) n.value.at(r, c) /= total;
  }
  return push(std::move(n));
}

NodeId Tape::layer_norm_cols(NodeId x, NodeId gamma, NodeId beta) {
  const DenseArray& X = nodes_[x].value;
  const DenseArray& g = nodes_[gamma].value;
  const DenseArray& b = nodes_[beta].value;
  require(X.is_matrix(), "layer_norm_cols: matrix required");
  require(g.size() == X.rows() && b.size() == X.rows(),
          "layer_norm_cols: gamma/beta size mismatch");
  TapeNode n;
  n.op = OpKind::LayerNormCols;
  n.parents = {x, gamma, beta};
  const std::size_t m = X.rows();
  n.value = X;
  for (std::size_t c = 0; c < X.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m; ++r) mean += X.at(r, c);
    mean /= double(m);
    double var = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      const double d = X.at(r, c) - mean;
      var += d * d;
    }
    var /= double(m);
    const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t r = 0; r < m; ++r) {
      n.value.at(r, c) = g[r] * (X.at(r, c) - mean) * inv_sigma + b[r];
    }
  }
  return push(std::move(n));
}

NodeId Tape::bce_with_logits(NodeId logit, double label) {
  const DenseArray& s = nodes_[logit].value;
  require(s.is_scalar(), "bce_with_logits: scalar logit required");
  const double x = s[0];
  // max(x,0) - x*y + log(1 + exp(-|x|)), the overflow-safe form.
  const double loss =
      std::max(x, 0.0) - x * label + std::log1p(std::exp(-std::abs(x)));
  TapeNode n;
  n.op = OpKind::BceWithLogits;
  n.parents = {logit};
  n.scalar_aux = label;
  n.value = DenseArray::scalar(loss);
  return push(std::move(n));
}

NodeId Tape::abs_diff(NodeId x, double target) {
  const DenseArray& v = nodes_[x].value;
  require(v.is_scalar(), "abs_diff: scalar required");
  TapeNode n;
  n.op = OpKind::AbsDiff;
  n.parents = {x};
  n.scalar_aux = target;
  n.value = DenseArray::scalar(std::abs(v[0] - target));
  return push(std::move(n));
}

NodeId Tape::jsd_vs_reference(NodeId p, DenseArray reference) {
  const DenseArray& P = nodes_[p].value;
  require(P.is_vector() && P.size() == reference.size(),
          "jsd_vs_reference: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double m = 0.5 * (P[i] + reference[i]);
    if (P[i] > 0.0) acc += 0.5 * P[i] * std::log(P[i] / m);
    if (reference[i] > 0.0) acc += 0.5 * reference[i] * std::log(reference[i] / m);
  }
  TapeNode n;
  n.op = OpKind::JsdRef;
  n.parents = {p};
  n.reference = std::move(reference);
  n.value = DenseArray::scalar(acc);
  return push(std::move(n));
}

NodeId Tape::apply(OpKind kind, std::span<const NodeId> inputs) {
  auto unary = [&]() {
    require(inputs.size() == 1, "apply: one input expected");
    return inputs[0];
  };
  auto binary = [&]() {
    require(inputs.size() == 2, "apply: two inputs expected");
    return std::pair<NodeId, NodeId>(inputs[0], inputs[1]);
  };
  switch (kind) {
    case OpKind::MatMul: {
      auto [a, b] = binary();
      return matmul(a, b);
    }
    case OpKind::Add: {
      auto [a, b] = binary();
      return add(a, b);
    }
    case OpKind::Sub: {
      auto [a, b] = binary();
      return sub(a, b);
    }
    case OpKind::Mul: {
      auto [a, b] = binary();
      return mul(a, b);
    }
    case OpKind::Concat: {
      auto [a, b] = binary();
      return concat(a, b);
    }
    case OpKind::Tanh:
      return tanh(unary());
    case OpKind::Sigmoid:
      return sigmoid(unary());
    case OpKind::Relu:
      return relu(unary());
    case OpKind::Exp:
      return exp(unary());
    case OpKind::Log:
      return log(unary());
    case OpKind::Sum:
      return sum(unary());
    case OpKind::L2Norm:
      return l2norm(unary());
    default:
      throw std::invalid_argument(
          "apply: kind needs its dedicated constructor");
  }
}

void Tape::backward(NodeId root) {
  if (root >= nodes_.size()) throw std::invalid_argument("backward: bad root");
  if (!nodes_[root].value.is_scalar()) {
    throw std::invalid_argument("backward: root must be scalar");
  }

  for (TapeNode& n : nodes_) {
    n.grad = DenseArray::zeros(n.value.shape());
  }
  nodes_[root].grad[0] = 1.0;

  for (std::size_t idx = root + 1; idx-- > 0;) {
    TapeNode& n = nodes_[idx];
    const DenseArray& G = n.grad;
    switch (n.op) {
      case OpKind::Leaf:
        break;
      case OpKind::MatMul: {
        const DenseArray& A = nodes_[n.parents[0]].value;
        const DenseArray& B = nodes_[n.parents[1]].value;
        DenseArray& dA = nodes_[n.parents[0]].grad;
        DenseArray& dB = nodes_[n.parents[1]].grad;
        const std::size_t m = A.rows();
        const std::size_t k = A.cols();
        if (B.is_vector()) {
          for (std::size_t i = 0; i < m; ++i) {
            const double gi = G[i];
            if (gi == 0.0) continue;
            for (std::size_t j = 0; j < k; ++j) {
              dA.at(i, j) += gi * B[j];
              dB[j] += gi * A.at(i, j);
            }
          }
        } else {
          const std::size_t c = B.cols();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t l = 0; l < c; ++l) {
              const double gil = G.at(i, l);
              if (gil == 0.0) continue;
              for (std::size_t j = 0; j < k; ++j) {
                dA.at(i, j) += gil * B.at(j, l);
                dB.at(j, l) += gil * A.at(i, j);
              }
            }
          }
        }
        break;
      }
      case OpKind::Add: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        DenseArray& dB = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i];
          dB[i] += G[i];
        }
        break;
      }
      case OpKind::Sub: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        DenseArray& dB = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i];
          dB[i] -= G[i];
        }
        break;
      }
      case OpKind::Mul: {
        const DenseArray& A = nodes_[n.parents[0]].value;
        const DenseArray& B = nodes_[n.parents[1]].value;
        DenseArray& dA = nodes_[n.parents[0]].grad;
        DenseArray& dB = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i] * B[i];
          dB[i] += G[i] * A[i];
        }
        break;
      }
      case OpKind::Scale: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += n.scalar_aux * G[i];
        }
        break;
      }
      case OpKind::Tanh: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i] * (1.0 - n.value[i] * n.value[i]);
        }
        break;
      }
      case OpKind::Sigmoid: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i] * n.value[i] * (1.0 - n.value[i]);
        }
        break;
      }
      case OpKind::Relu: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          if (n.value[i] > 0.0) dA[i] += G[i];
        }
        break;
      }
      case OpKind::Exp: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i] * n.value[i];
        }
        break;
      }
      case OpKind::Log: {
        const DenseArray& A = nodes_[n.parents[0]].value;
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) {
          dA[i] += G[i] / A[i];
        }
        break;
      }
      case OpKind::Sum: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        const double g = G[0];
        for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += g;
        break;
      }
      case OpKind::Slice: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        const DenseArray& A = nodes_[n.parents[0]].value;
        if (A.is_vector()) {
          for (std::size_t i = n.index_aux0; i < n.index_aux1; ++i) {
            dA[i] += G[i - n.index_aux0];
          }
        } else {
          for (std::size_t r = n.index_aux0; r < n.index_aux1; ++r) {
            for (std::size_t c = 0; c < A.cols(); ++c) {
              dA.at(r, c) += G.at(r - n.index_aux0, c);
            }
          }
        }
        break;
      }
      case OpKind::Column: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t r = 0; r < G.size(); ++r) {
          dA.at(r, n.index_aux0) += G[r];
        }
        break;
      }
      case OpKind::Concat: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        DenseArray& dB = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += G[i];
        for (std::size_t i = 0; i < dB.size(); ++i) dB[i] += G[dA.size() + i];
        break;
      }
      case OpKind::Reshape: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
        break;
      }
      case OpKind::Transpose: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t r = 0; r < G.rows(); ++r) {
          for (std::size_t c = 0; c < G.cols(); ++c) {
            dA.at(c, r) += G.at(r, c);
          }
        }
        break;
      }
      case OpKind::GatherCols: {
        DenseArray& dS = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < n.indices.size(); ++i) {
          for (std::size_t r = 0; r < G.rows(); ++r) {
            dS.at(r, n.indices[i]) += G.at(r, i);
          }
        }
        break;
      }
      case OpKind::StackCols: {
        for (std::size_t i = 0; i < n.parents.size(); ++i) {
          DenseArray& dV = nodes_[n.parents[i]].grad;
          for (std::size_t r = 0; r < dV.size(); ++r) {
            dV[r] += G.at(r, i);
          }
        }
        break;
      }
      case OpKind::L2Norm: {
        const double g = G[0];
        if (g == 0.0) break;
        const double norm = n.value[0];
        if (norm == 0.0) {
          throw std::runtime_error(
              "backward: l2norm gradient undefined at the zero vector");
        }
        const DenseArray& A = nodes_[n.parents[0]].value;
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < A.size(); ++i) {
          dA[i] += g * A[i] / norm;
        }
        break;
      }
      case OpKind::Projection: {
        SimplexPoint point;
        point.p = n.value;
        point.support = n.support;
        const DenseArray& z = nodes_[n.parents[0]].value;
        DenseArray v = projection_vjp(n.projection_kind, point, G, z);
        DenseArray& dA = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < v.size(); ++i) dA[i] += v[i];
        break;
      }
      case OpKind::ColwiseAdd: {
        DenseArray& dM = nodes_[n.parents[0]].grad;
        DenseArray& db = nodes_[n.parents[1]].grad;
        const std::size_t rows = n.value.rows();
        const std::size_t cols = n.value.cols();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            dM.at(r, c) += G.at(r, c);
            db[r] += G.at(r, c);
          }
        }
        break;
      }
      case OpKind::SoftmaxCols: {
        DenseArray& dA = nodes_[n.parents[0]].grad;
        const std::size_t rows = n.value.rows();
        const std::size_t cols = n.value.cols();
        for (std::size_t c = 0; c < cols; ++c) {
          double dot = 0.0;
          for (std::size_t r = 0; r < rows; ++r) {
            dot += n.value.at(r, c) * G.at(r, c);
          }
          for (std::size_t r = 0; r < rows; ++r) {
            dA.at(r, c) += n.value.at(r, c) * (G.at(r, c) - dot);
          }
        }
        break;
      }
      case OpKind::LayerNormCols: {
        const DenseArray& X = nodes_[n.parents[0]].value;
        const DenseArray& gm = nodes_[n.parents[1]].value;
        DenseArray& dX = nodes_[n.parents[0]].grad;
        DenseArray& dGamma = nodes_[n.parents[1]].grad;
        DenseArray& dBeta = nodes_[n.parents[2]].grad;
        const std::size_t m = X.rows();
        for (std::size_t c = 0; c < X.cols(); ++c) {
          double mean = 0.0;
          for (std::size_t r = 0; r < m; ++r) mean += X.at(r, c);
          mean /= double(m);
          double var = 0.0;
          for (std::size_t r = 0; r < m; ++r) {
            const double d = X.at(r, c) - mean;
            var += d * d;
          }
          var /= double(m);
          const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);

          double mean_gg = 0.0;   // mean of gamma .* G
          double mean_ggx = 0.0;  // mean of gamma .* G .* xhat
          for (std::size_t r = 0; r < m; ++r) {
            const double xhat = (X.at(r, c) - mean) * inv_sigma;
            const double gg = gm[r] * G.at(r, c);
            mean_gg += gg;
            mean_ggx += gg * xhat;
            dGamma[r] += G.at(r, c) * xhat;
            dBeta[r] += G.at(r, c);
          }
          mean_gg /= double(m);
          mean_ggx /= double(m);
          for (std::size_t r = 0; r < m; ++r) {
            const double xhat = (X.at(r, c) - mean) * inv_sigma;
            const double gg = gm[r] * G.at(r, c);
            dX.at(r, c) += inv_sigma * (gg - mean_gg - xhat * mean_ggx);
          }
        }
        break;
      }
      case OpKind::BceWithLogits: {
        const double g = G[0];
        if (g == 0.0) break;
        const double x = nodes_[n.parents[0]].value[0];
        nodes_[n.parents[0]].grad[0] +=
            g * (stable_sigmoid(x) - n.scalar_aux);
        break;
      }
      case OpKind::AbsDiff: {
        const double g = G[0];
        if (g == 0.0) break;
        const double d = nodes_[n.parents[0]].value[0] - n.scalar_aux;
        const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
        nodes_[n.parents[0]].grad[0] += g * sign;
        break;
      }
      case OpKind::JsdRef: {
        const double g = G[0];
        if (g == 0.0) break;
        const DenseArray& P = nodes_[n.parents[0]].value;
        DenseArray& dP = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < P.size(); ++i) {
          // d JSD / d p_i = 0.5 ln(p_i / m_i); entries off the support of p
          // take the zero one-sided choice (the projection masks them too).
          if (P[i] <= 0.0) continue;
          const double m = 0.5 * (P[i] + n.reference[i]);
          dP[i] += g * 0.5 * std::log(P[i] / m);
        }
        break;
      }
    }
  }
}

}  // namespace attnex
