#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "attnex/dense_array.hpp"

namespace attnex {

/// Elementwise transform applied to scores before the sparsegen projection.
/// Experiments all run with Identity; Tanh is available through config.
enum class ScoreTransform { Identity, Tanh };

enum class ProjectionFamily { Softmax, Sparsemax, Sparsegen };

/// Which map takes raw alignment scores onto the probability simplex.
/// For Sparsegen the sparsity knob is lambda in (-inf, 1); larger values
/// give sparser distributions, lambda = 0 with identity transform is
/// exactly sparsemax.
struct ProjectionKind {
  ProjectionFamily family = ProjectionFamily::Softmax;
  double lambda = 0.0;
  ScoreTransform transform = ScoreTransform::Identity;

  static ProjectionKind softmax() { return {ProjectionFamily::Softmax, 0.0}; }
  static ProjectionKind sparsemax() {
    return {ProjectionFamily::Sparsemax, 0.0};
  }
  static ProjectionKind sparsegen(double lambda,
                                  ScoreTransform g = ScoreTransform::Identity);

  std::string name() const;
};

ProjectionKind projection_kind_from_name(const std::string& name,
                                         double lambda = 0.0);

/// Point on the probability simplex plus its support {i : p_i > 0}.
/// Sparse projections produce exact zeros, so membership is p_i > 0 with
/// no epsilon.
struct SimplexPoint {
  DenseArray p;
  std::vector<std::size_t> support;

  std::size_t size() const { return p.size(); }
  bool full_support() const { return support.size() == p.size(); }
};

SimplexPoint make_simplex_point(DenseArray p);

/// Softmax with max-shift for stability; always full support.
SimplexPoint softmax(const DenseArray& scores);

/// Euclidean projection onto the simplex via sort-and-threshold:
/// p_i = max(z_i - tau, 0) with tau chosen so the positive part sums to 1.
SimplexPoint sparsemax(const DenseArray& scores);

/// Regularized projection argmin ||p - g(z)||^2 - lambda ||p||^2 over the
/// simplex, computed through the reduction sparsemax(g(z) / (1 - lambda)).
SimplexPoint sparsegen(const DenseArray& scores, double lambda,
                       ScoreTransform g = ScoreTransform::Identity);

SimplexPoint project(const ProjectionKind& kind, const DenseArray& scores);

/// Vector-Jacobian product of the projection at output p. For sparse kinds
/// the Jacobian at a support boundary is the generalized one induced by the
/// support computed in the forward pass.
///   Softmax:   p .* (v - <p, v>)
///   Sparsemax: s .* (v - mean_{j in support} v_j)
///   Sparsegen: sparsemax rule scaled by 1/(1 - lambda), times g'(z) when
///              the transform is not identity (pass the forward scores).
DenseArray projection_vjp(const ProjectionKind& kind, const SimplexPoint& p,
                          const DenseArray& upstream);
DenseArray projection_vjp(const ProjectionKind& kind, const SimplexPoint& p,
                          const DenseArray& upstream,
                          const DenseArray& forward_scores);

}  // namespace attnex
