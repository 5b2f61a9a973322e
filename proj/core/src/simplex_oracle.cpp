#include "attnex/simplex_oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace attnex {

SimplexPoint simplex_qp_oracle(const DenseArray& scores, double lambda,
                               ScoreTransform g) {
  const std::size_t n = scores.size();
  if (n == 0) throw std::invalid_argument("simplex_qp_oracle: empty input");
  if (n > 12) {
    throw std::invalid_argument(
        "simplex_qp_oracle: n > 12 (enumeration cost 2^n)");
  }
  if (lambda >= 1.0) {
    throw std::invalid_argument("simplex_qp_oracle: lambda must be < 1");
  }

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = g == ScoreTransform::Tanh ? std::tanh(scores[i]) : scores[i];
  }

  const double one_minus_lambda = 1.0 - lambda;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<double> best_p(n, 0.0);

  std::vector<double> p(n);
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    // Stationarity on the support: p_i = (u_i - mu/2) / (1 - lambda),
    // with mu/2 fixed by the sum-to-one constraint.
    double support_sum = 0.0;
    int support_size = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        support_sum += u[i];
        ++support_size;
      }
    }
    const double half_mu =
        (support_sum - one_minus_lambda) / double(support_size);

    bool feasible = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        p[i] = (u[i] - half_mu) / one_minus_lambda;
        if (p[i] < 0.0) {
          feasible = false;
          break;
        }
      } else {
        p[i] = 0.0;
      }
    }
    if (!feasible) continue;

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = p[i] - u[i];
      objective += diff * diff - lambda * p[i] * p[i];
    }
    if (objective < best_objective) {
      best_objective = objective;
      best_p = p;
    }
  }

  return make_simplex_point(DenseArray::vector(std::move(best_p)));
}

}  // namespace attnex
