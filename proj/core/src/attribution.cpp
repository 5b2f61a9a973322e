#include "attnex/attribution.hpp"

#include <cmath>

namespace attnex {

std::string fi_kind_name(FIKind k) {
  return k == FIKind::Gradient ? "grad" : "loo";
}

std::string fi_target_name(FITarget t) {
  return t == FITarget::Inputs ? "input" : "intermediate";
}

namespace {

void require_traced(const AttentionTrace& trace, const char* who) {
  if (!trace.traced()) {
    throw std::invalid_argument(std::string(who) +
                                ": trace built without tracing enabled");
  }
}

/// Per-column L2 norms of a gradient matrix, normalized to sum 1.
DenseArray normalize_column_norms(const DenseArray& grad, const char* who) {
  const std::size_t n = grad.cols();
  DenseArray weights({n});
  double total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double sq = 0.0;
    for (std::size_t r = 0; r < grad.rows(); ++r) {
      const double g = grad.at(r, c);
      sq += g * g;
    }
    weights[c] = std::sqrt(sq);
    total += weights[c];
  }
  if (total <= 0.0) {
    throw DegenerateAttribution(std::string(who) +
                                ": all-zero gradient, nothing to normalize");
  }
  for (std::size_t c = 0; c < n; ++c) weights[c] /= total;
  return weights;
}

}  // namespace

FIDistribution grad_fi_output(const AttentionTrace& trace, FITarget over) {
  require_traced(trace, "grad_fi_output");
  Tape& tape = *trace.tape;
  tape.backward(trace.nodes.prediction);
  const NodeId source = over == FITarget::Inputs ? trace.nodes.embedded
                                                 : trace.nodes.reps;
  FIDistribution out;
  out.kind = FIKind::Gradient;
  out.over = over;
  out.weights = normalize_column_norms(tape.grad(source), "grad_fi_output");
  return out;
}

FIDistribution grad_fi_intermediate(const AttentionTrace& trace,
                                    std::size_t p) {
  require_traced(trace, "grad_fi_intermediate");
  if (p >= trace.length()) {
    throw std::invalid_argument("grad_fi_intermediate: index out of range");
  }
  Tape& tape = *trace.tape;
  // The tape is append-only, so the magnitude node can be added after the
  // forward pass was recorded.
  const NodeId rep_col = tape.column(trace.nodes.reps, p);
  if (tape.value(rep_col).l2_norm() == 0.0) {
    throw DegenerateAttribution(
        "grad_fi_intermediate: representation at p is the zero vector");
  }
  const NodeId magnitude = tape.l2norm(rep_col);
  tape.backward(magnitude);
  FIDistribution out;
  out.kind = FIKind::Gradient;
  out.over = FITarget::Inputs;
  out.target_index = int(p);
  out.weights = normalize_column_norms(tape.grad(trace.nodes.embedded),
                                       "grad_fi_intermediate");
  return out;
}

FIDistribution loo_fi(const AttentionTrace& trace, const ModelParams& params,
                      const ModelConfig& config, FITarget over) {
  const std::size_t n = trace.length();
  if (n < 2) {
    throw std::invalid_argument("loo_fi: need at least two positions");
  }

  DenseArray deltas({n});
  if (over == FITarget::Inputs) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> reduced;
      reduced.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) reduced.push_back(trace.tokens[j]);
      }
      const AttentionTrace without = forward(reduced, params, config);
      deltas[i] = std::abs(trace.prediction - without.prediction);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      DenseArray reduced({trace.reps.rows(), n - 1});
      std::size_t cursor = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t r = 0; r < trace.reps.rows(); ++r) {
          reduced.at(r, cursor) = trace.reps.at(r, j);
        }
        ++cursor;
      }
      Tape tape;
      const BoundParams bound = bind_params(tape, params, config);
      const NodeId reps = tape.leaf(std::move(reduced));
      const ForwardNodes head = build_pooling_head(tape, bound, config, reps);
      deltas[i] = std::abs(trace.prediction - tape.value(head.prediction)[0]);
    }
  }

  const double total = deltas.sum();
  if (total <= 0.0) {
    throw DegenerateAttribution(
        "loo_fi: removing positions never changes the prediction");
  }
  FIDistribution out;
  out.kind = FIKind::LeaveOneOut;
  out.over = over;
  out.weights = DenseArray({n});
  for (std::size_t i = 0; i < n; ++i) out.weights[i] = deltas[i] / total;
  return out;
}

double normalized_entropy(const DenseArray& distribution) {
  const std::size_t n = distribution.size();
  if (n < 2) {
    throw std::invalid_argument(
        "normalized_entropy: undefined for single-element distributions");
  }
  double entropy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = distribution[i];
    if (p < -1e-12) {
      throw std::invalid_argument("normalized_entropy: negative weight");
    }
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return entropy / std::log(double(n));
}

double normalized_entropy(const FIDistribution& dist) {
  return normalized_entropy(dist.weights);
}

double normalized_entropy(const SimplexPoint& point) {
  return normalized_entropy(point.p);
}

}  // namespace attnex
