#include "attnex/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace attnex {

namespace {

double eval(const TracedScalarFn& f, const DenseArray& at) {
  Tape tape;
  const NodeId x = tape.leaf(at);
  const NodeId root = f(tape, x);
  const DenseArray& out = tape.value(root);
  if (!out.is_scalar()) {
    throw std::invalid_argument("grad_check: function is not scalar-valued");
  }
  if (!std::isfinite(out[0])) {
    throw std::runtime_error("grad_check: non-finite forward value");
  }
  return out[0];
}

}  // namespace

double grad_check(const TracedScalarFn& f, const DenseArray& at, double h) {
  Tape tape;
  const NodeId x = tape.leaf(at);
  const NodeId root = f(tape, x);
  if (!tape.value(root).is_scalar()) {
    throw std::invalid_argument("grad_check: function is not scalar-valued");
  }
  if (!std::isfinite(tape.value(root)[0])) {
    throw std::runtime_error("grad_check: non-finite forward value");
  }
  tape.backward(root);
  const DenseArray analytic = tape.grad(x);

  double worst = 0.0;
  DenseArray probe = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    probe[i] = at[i] + h;
    const double up = eval(f, probe);
    probe[i] = at[i] - h;
    const double down = eval(f, probe);
    probe[i] = at[i];
    const double central = (up - down) / (2.0 * h);
    const double err =
        std::abs(analytic[i] - central) / (std::abs(analytic[i]) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace attnex
