#pragma once

#include "attnex/dense_array.hpp"
#include "attnex/projections.hpp"

namespace attnex {

/// Exact minimizer of ||p - g(z)||^2 - lambda ||p||^2 over the simplex,
/// found by enumerating every non-empty support set, solving the
/// equality-constrained quadratic on each, and keeping the feasible
/// solution with the least objective. Deliberately shares no code with
/// sparsemax/sparsegen; used as their correctness oracle.
///
/// Cost is 2^n - 1 subproblems; inputs with n > 12 are rejected.
SimplexPoint simplex_qp_oracle(const DenseArray& scores, double lambda,
                               ScoreTransform g = ScoreTransform::Identity);

}  // namespace attnex
