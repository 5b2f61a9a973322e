#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "attnex/attribution.hpp"
#include "attnex/corpus.hpp"
#include "attnex/model.hpp"
#include "attnex/train.hpp"

namespace attnex {

/// Raised when a rank statistic is undefined, e.g. one side entirely tied.
class DegenerateStatistic : public std::runtime_error {
 public:
  explicit DegenerateStatistic(const std::string& what)
      : std::runtime_error(what) {}
};

/// Tie-corrected Kendall rank correlation,
///   (C - D) / sqrt((C + D + T_u)(C + D + T_v)),
/// computed in O(n log n) by lexicographic sort plus inversion counting.
/// Ties matter here because sparse attention vectors are mostly zeros.
double kendall_tau_b(std::span<const double> u, std::span<const double> v);

/// Jensen-Shannon divergence with natural log; symmetric, in [0, ln 2],
/// zero iff the distributions match.
double jsd(std::span<const double> p, std::span<const double> q);
double jsd(const SimplexPoint& p, const SimplexPoint& q);

struct FISpec {
  FIKind kind = FIKind::Gradient;
  FITarget over = FITarget::Inputs;
};

struct CorrelationSummary {
  FISpec spec;
  double tau_mean = 0.0;
  double tau_std = 0.0;
  std::size_t n_examples = 0;
  std::size_t n_skipped = 0;
};

/// Per-example Kendall tau-b between the attention distribution and each
/// requested feature-importance distribution, averaged over the example
/// set. Degenerate examples (too short, fully tied, zero importance) are
/// skipped and counted.
std::vector<CorrelationSummary> correlate_attention_fi(
    const ModelParams& params, const ModelConfig& config,
    const std::vector<Example>& examples, std::span<const FISpec> specs);

/// Mean/std of the normalized entropy of one FI distribution over examples.
struct EntropySummary {
  FISpec spec;
  double entropy_mean = 0.0;
  double entropy_std = 0.0;
  std::size_t n_examples = 0;
  std::size_t n_skipped = 0;
};

/// When `samples` is given it receives the per-example entropies (for
/// distribution plots).
EntropySummary entropy_of_fi(const ModelParams& params,
                             const ModelConfig& config,
                             const std::vector<Example>& examples, FISpec spec,
                             std::vector<double>* samples = nullptr);

/// Mean over examples and positions p of the normalized entropy of the
/// gradient influence of inputs on ||h_p||.
EntropySummary entropy_of_rep_influence(const ModelParams& params,
                                        const ModelConfig& config,
                                        const std::vector<Example>& examples);

struct SweepCell {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  double entropy_mean = 0.0;   // H(grad FI of inputs), mean over test set
  double tau_grad_mean = 0.0;  // tau(attention, grad FI of inputs)
  double tau_loo_mean = 0.0;   // tau(attention, LOO FI of inputs)
  double accuracy = 0.0;
  bool diverged = false;
};

struct SeedTrend {
  std::uint64_t seed = 0;
  double tau_lambda_entropy = 0.0;      // Kendall tau-b of (lambda, entropy)
  double pearson_lambda_entropy = 0.0;  // emitted for reference
};

struct SweepResult {
  std::vector<SweepCell> cells;       // one per (lambda, seed), lambda-major
  std::vector<SeedTrend> per_seed;
  double overall_tau = 0.0;           // tau over seed-averaged entropies
  double overall_pearson = 0.0;
};

/// Trains one sparsegen model per (lambda, seed) grid cell and relates the
/// sparsity knob to the dispersion of input feature importance. Cells are
/// independent and run on up to `jobs` threads; results are merged in grid
/// order so output is schedule-independent. Diverged cells are flagged and
/// excluded from trends.
SweepResult lambda_sweep(const Corpus& corpus, const ModelConfig& base_config,
                         const TrainConfig& base_train,
                         std::span<const double> lambdas,
                         std::span<const std::uint64_t> seeds,
                         std::size_t jobs = 1);

double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace attnex
