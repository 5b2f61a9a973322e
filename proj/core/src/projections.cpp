#include "attnex/projections.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace attnex {

ProjectionKind ProjectionKind::sparsegen(double lambda, ScoreTransform g) {
  if (lambda >= 1.0) {
    throw std::invalid_argument("sparsegen: lambda must be < 1");
  }
  return {ProjectionFamily::Sparsegen, lambda, g};
}

std::string ProjectionKind::name() const {
  switch (family) {
    case ProjectionFamily::Softmax:
      return "softmax";
    case ProjectionFamily::Sparsemax:
      return "sparsemax";
    case ProjectionFamily::Sparsegen:
      return "sparsegen";
  }
  return "?";
}

ProjectionKind projection_kind_from_name(const std::string& name,
                                         double lambda) {
  if (name == "softmax") return ProjectionKind::softmax();
  if (name == "sparsemax") return ProjectionKind::sparsemax();
  if (name == "sparsegen") return ProjectionKind::sparsegen(lambda);
  throw std::invalid_argument("unknown projection: " + name);
}

SimplexPoint make_simplex_point(DenseArray p) {
  SimplexPoint out;
  out.support.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) out.support.push_back(i);
  }
  out.p = std::move(p);
  return out;
}

SimplexPoint softmax(const DenseArray& scores) {
  if (scores.size() == 0) throw std::invalid_argument("softmax: empty input");
  check_finite(scores, "softmax");
  const double shift = scores.max();
  DenseArray p({scores.size()});
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - shift);
    total += p[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) p[i] /= total;
  return make_simplex_point(std::move(p));
}

SimplexPoint sparsemax(const DenseArray& scores) {
  const std::size_t n = scores.size();
  if (n == 0) throw std::invalid_argument("sparsemax: empty input");
  check_finite(scores, "sparsemax");

  std::vector<double> sorted(scores.data().begin(), scores.data().end());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());

  // k(z) = max{ k : 1 + k z_(k) > sum_{j<=k} z_(j) }
  double cumsum = 0.0;
  double support_sum = 0.0;
  std::size_t k_z = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    cumsum += sorted[k - 1];
    if (1.0 + double(k) * sorted[k - 1] > cumsum) {
      k_z = k;
      support_sum = cumsum;
    }
  }
  const double tau = (support_sum - 1.0) / double(k_z);

  DenseArray p({n});
  for (std::size_t i = 0; i < n; ++i) p[i] = std::max(scores[i] - tau, 0.0);
  return make_simplex_point(std::move(p));
}

SimplexPoint sparsegen(const DenseArray& scores, double lambda,
                       ScoreTransform g) {
  if (lambda >= 1.0) {
    throw std::invalid_argument("sparsegen: lambda must be < 1");
  }
  DenseArray scaled({scores.size()});
  const double inv = 1.0 / (1.0 - lambda);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double zi =
        g == ScoreTransform::Tanh ? std::tanh(scores[i]) : scores[i];
    scaled[i] = zi * inv;
  }
  return sparsemax(scaled);
}

SimplexPoint project(const ProjectionKind& kind, const DenseArray& scores) {
  switch (kind.family) {
    case ProjectionFamily::Softmax:
      return softmax(scores);
    case ProjectionFamily::Sparsemax:
      return sparsemax(scores);
    case ProjectionFamily::Sparsegen:
      return sparsegen(scores, kind.lambda, kind.transform);
  }
  throw std::logic_error("project: bad kind");
}

namespace {

DenseArray sparsemax_vjp(const SimplexPoint& p, const DenseArray& v) {
  DenseArray out({v.size()});
  if (p.support.empty()) return out;
  double mean = 0.0;
  for (std::size_t j : p.support) mean += v[j];
  mean /= double(p.support.size());
  for (std::size_t j : p.support) out[j] = v[j] - mean;
  return out;
}

}  // namespace

DenseArray projection_vjp(const ProjectionKind& kind, const SimplexPoint& p,
                          const DenseArray& upstream) {
  if (kind.family == ProjectionFamily::Sparsegen &&
      kind.transform != ScoreTransform::Identity) {
    throw std::invalid_argument(
        "projection_vjp: non-identity transform needs the forward scores");
  }
  if (upstream.size() != p.size()) {
    throw std::invalid_argument("projection_vjp: upstream length mismatch");
  }
  switch (kind.family) {
    case ProjectionFamily::Softmax: {
      double dot = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) dot += p.p[i] * upstream[i];
      DenseArray out({p.size()});
      for (std::size_t i = 0; i < p.size(); ++i) {
        out[i] = p.p[i] * (upstream[i] - dot);
      }
      return out;
    }
    case ProjectionFamily::Sparsemax:
      return sparsemax_vjp(p, upstream);
    case ProjectionFamily::Sparsegen: {
      DenseArray out = sparsemax_vjp(p, upstream);
      const double inv = 1.0 / (1.0 - kind.lambda);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
      return out;
    }
  }
  throw std::logic_error("projection_vjp: bad kind");
}

DenseArray projection_vjp(const ProjectionKind& kind, const SimplexPoint& p,
                          const DenseArray& upstream,
                          const DenseArray& forward_scores) {
  if (kind.family != ProjectionFamily::Sparsegen ||
      kind.transform == ScoreTransform::Identity) {
    return projection_vjp(kind, p, upstream);
  }
  ProjectionKind identity_kind = kind;
  identity_kind.transform = ScoreTransform::Identity;
  DenseArray out = projection_vjp(identity_kind, p, upstream);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = std::tanh(forward_scores[i]);
    out[i] *= 1.0 - t * t;
  }
  return out;
}

}  // namespace attnex
