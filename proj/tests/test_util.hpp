#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "attnex/corpus.hpp"
#include "attnex/model.hpp"
#include "attnex/projections.hpp"
#include "attnex/rng.hpp"
#include "attnex/tape.hpp"

namespace attnex::testing {

inline DenseArray random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  DenseArray v({n});
  for (std::size_t i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline DenseArray random_matrix(Rng& rng, std::size_t r, std::size_t c,
                                double scale = 1.0) {
  DenseArray m({r, c});
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = scale * rng.normal();
  return m;
}

/// Distance of the scores vector from the nearest sparse-support boundary
/// of the given projection; FD checks want this comfortably above the step.
inline double support_margin(const ProjectionKind& kind,
                             const DenseArray& scores) {
  if (kind.family == ProjectionFamily::Softmax) return 1.0;
  DenseArray scaled = scores;
  if (kind.family == ProjectionFamily::Sparsegen) {
    for (std::size_t i = 0; i < scaled.size(); ++i) {
      const double z = kind.transform == ScoreTransform::Tanh
                           ? std::tanh(scores[i])
                           : scores[i];
      scaled[i] = z / (1.0 - kind.lambda);
    }
  }
  const SimplexPoint p = sparsemax(scaled);
  if (p.support.empty()) return 0.0;
  const double tau = scaled[p.support.front()] - p.p[p.support.front()];
  double margin = 1e9;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    margin = std::min(margin, std::abs(scaled[i] - tau));
  }
  return margin;
}

/// Central-difference check of d(scalar)/d(every parameter) for a model
/// built by `loss_of_params`. Returns the max relative error.
inline double param_grad_max_rel_err(
    ModelParams& params,
    const std::function<double(const ModelParams&)>& loss_of_params,
    const std::function<void(ModelParams&, std::vector<DenseArray>&)>&
        analytic_grads,
    double h = 1e-5) {
  std::vector<DenseArray> grads;
  analytic_grads(params, grads);

  double worst = 0.0;
  std::size_t array_index = 0;
  for_each_param(params, [&](const std::string&, DenseArray& a, ParamGroup) {
    DenseArray& grad = grads[array_index++];
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double saved = a[i];
      a[i] = saved + h;
      const double up = loss_of_params(params);
      a[i] = saved - h;
      const double down = loss_of_params(params);
      a[i] = saved;
      const double central = (up - down) / (2.0 * h);
      const double err =
          std::abs(grad[i] - central) / (std::abs(grad[i]) + 1e-12);
      worst = std::max(worst, err);
    }
  });
  return worst;
}

/// Tiny planted-keyword corpus for fast training tests.
inline Corpus tiny_corpus(std::size_t train_n = 60, std::size_t test_n = 20,
                          std::uint64_t seed = 5) {
  SyntheticSpec spec;
  spec.train_examples = train_n;
  spec.test_examples = test_n;
  spec.vocab_size = 30;
  spec.sequence_length = 8;
  spec.keywords_per_class = 2;
  spec.seed = seed;
  return generate_synthetic(spec);
}

}  // namespace attnex::testing
