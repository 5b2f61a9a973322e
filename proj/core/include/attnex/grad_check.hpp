#pragma once

#include <functional>

#include "attnex/dense_array.hpp"
#include "attnex/tape.hpp"

namespace attnex {

/// A traced scalar function: given a tape and the id of its input leaf,
/// build the computation and return the scalar root id.
using TracedScalarFn = std::function<NodeId(Tape&, NodeId)>;

/// Compares the analytic gradient of f at `at` against central finite
/// differences with step h. Returns the max over coordinates of
/// |analytic - central| / (|analytic| + 1e-12). The caller is responsible
/// for picking points away from kinks of non-smooth primitives.
double grad_check(const TracedScalarFn& f, const DenseArray& at,
                  double h = 1e-5);

}  // namespace attnex
