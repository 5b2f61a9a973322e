#pragma once

#include <stdexcept>
#include <string>

#include "attnex/dense_array.hpp"
#include "attnex/model.hpp"

namespace attnex {

/// Raised when an importance vector is identically zero (nothing to
/// normalize) or a norm target sits at a non-differentiable point. Callers
/// that aggregate over a corpus catch this and count the example skipped.
class DegenerateAttribution : public std::runtime_error {
 public:
  explicit DegenerateAttribution(const std::string& what)
      : std::runtime_error(what) {}
};

enum class FIKind { Gradient, LeaveOneOut };
enum class FITarget { Inputs, IntermediateReps };

std::string fi_kind_name(FIKind k);
std::string fi_target_name(FITarget t);

/// Normalized per-position importance: nonnegative, sums to one, one entry
/// per token (or per intermediate representation) of the source trace.
struct FIDistribution {
  DenseArray weights;
  FIKind kind = FIKind::Gradient;
  FITarget over = FITarget::Inputs;
  // For gradient importance targeting one representation's magnitude:
  // the index p; -1 otherwise.
  int target_index = -1;
};

/// Gradient importance of each position on the prediction. Over Inputs the
/// score is the L2 norm of d(prediction)/d(embedding column); over
/// IntermediateReps it is the norm of d(prediction)/d(h_i).
FIDistribution grad_fi_output(const AttentionTrace& trace,
                              FITarget over = FITarget::Inputs);

/// Gradient importance of each input on the magnitude ||h_p||. One backward
/// pass per call; callers wanting the full n x n influence matrix loop p.
FIDistribution grad_fi_intermediate(const AttentionTrace& trace,
                                    std::size_t p);

/// Erasure importance: |prediction - prediction-without-i| normalized.
/// Over Inputs token i is deleted and the model re-run; over
/// IntermediateReps column i of the representation matrix is removed ahead
/// of the pooling head, the encoder outputs staying fixed.
FIDistribution loo_fi(const AttentionTrace& trace, const ModelParams& params,
                      const ModelConfig& config,
                      FITarget over = FITarget::Inputs);

/// Shannon entropy divided by ln(n); 1 is uniform influence, 0 one-hot.
/// Requires n >= 2 (nothing to normalize by at n == 1).
double normalized_entropy(const DenseArray& distribution);
double normalized_entropy(const FIDistribution& dist);
double normalized_entropy(const SimplexPoint& point);

}  // namespace attnex
