#include "attnex/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

namespace attnex {

namespace {

/// Strict inversions in v counted by bottom-up merge sort.
std::uint64_t count_inversions(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> buffer(n);
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          inversions += mid - i;
          buffer[k++] = v[j++];
        } else {
          buffer[k++] = v[i++];
        }
      }
      while (i < mid) buffer[k++] = v[i++];
      while (j < hi) buffer[k++] = v[j++];
      std::copy(buffer.begin() + lo, buffer.begin() + hi, v.begin() + lo);
    }
  }
  return inversions;
}

std::uint64_t tie_pairs(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::uint64_t pairs = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= values.size(); ++i) {
    if (i < values.size() && values[i] == values[i - 1]) {
      ++run;
    } else {
      pairs += std::uint64_t(run) * (run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

}  // namespace

double kendall_tau_b(std::span<const double> u, std::span<const double> v) {
  const std::size_t n = u.size();
  if (n != v.size()) {
    throw std::invalid_argument("kendall_tau_b: length mismatch");
  }
  if (n < 2) {
    throw std::invalid_argument("kendall_tau_b: need at least two items");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (u[a] != u[b]) return u[a] < u[b];
    return v[a] < v[b];
  });

  const std::uint64_t n0 = std::uint64_t(n) * (n - 1) / 2;
  const std::uint64_t n1 = tie_pairs({u.begin(), u.end()});
  const std::uint64_t n2 = tie_pairs({v.begin(), v.end()});
  if (n1 == n0 || n2 == n0) {
    throw DegenerateStatistic("kendall_tau_b: one side is fully tied");
  }

  // Joint ties, from runs of equal (u, v) pairs in lexicographic order.
  std::uint64_t n3 = 0;
  {
    std::size_t run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && u[order[i]] == u[order[i - 1]] &&
          v[order[i]] == v[order[i - 1]]) {
        ++run;
      } else {
        n3 += std::uint64_t(run) * (run - 1) / 2;
        run = 1;
      }
    }
  }

  // With the secondary sort on v, pairs tied in u produce no inversions,
  // so the merge count is exactly the number of discordant pairs.
  std::vector<double> v_sorted(n);
  for (std::size_t i = 0; i < n; ++i) v_sorted[i] = v[order[i]];
  const std::uint64_t discordant = count_inversions(v_sorted);

  const double c_minus_d = double(n0) - double(n1) - double(n2) + double(n3) -
                           2.0 * double(discordant);
  const double denom = std::sqrt(double(n0 - n1)) * std::sqrt(double(n0 - n2));
  return c_minus_d / denom;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw std::invalid_argument("jsd: length mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) acc += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) acc += 0.5 * q[i] * std::log(q[i] / m);
  }
  return acc;
}

double jsd(const SimplexPoint& p, const SimplexPoint& q) {
  return jsd(p.p.data(), q.p.data());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson: bad lengths");
  }
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateStatistic("pearson: a side is constant");
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace {

struct RunningStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;

  void add(double x) {
    sum += x;
    sum_sq += x * x;
    ++count;
  }
  double mean() const { return count ? sum / double(count) : 0.0; }
  double stddev() const {
    if (count == 0) return 0.0;
    const double m = mean();
    const double var = std::max(sum_sq / double(count) - m * m, 0.0);
    return std::sqrt(var);
  }
};

FIDistribution compute_fi(const AttentionTrace& trace,
                          const ModelParams& params, const ModelConfig& config,
                          FISpec spec) {
  if (spec.kind == FIKind::Gradient) {
    return grad_fi_output(trace, spec.over);
  }
  return loo_fi(trace, params, config, spec.over);
}

}  // namespace

std::vector<CorrelationSummary> correlate_attention_fi(
    const ModelParams& params, const ModelConfig& config,
    const std::vector<Example>& examples, std::span<const FISpec> specs) {
  std::vector<RunningStats> stats(specs.size());
  std::vector<std::size_t> skipped(specs.size(), 0);

  for (const Example& ex : examples) {
    if (ex.tokens.size() < 2) {
      for (auto& s : skipped) ++s;
      continue;
    }
    const AttentionTrace trace =
        forward(ex.tokens, params, config, TraceMode::KeepTape);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      try {
        const FIDistribution fi = compute_fi(trace, params, config, specs[k]);
        stats[k].add(
            kendall_tau_b(trace.attention.p.data(), fi.weights.data()));
      } catch (const DegenerateAttribution&) {
        ++skipped[k];
      } catch (const DegenerateStatistic&) {
        ++skipped[k];
      }
    }
  }

  std::vector<CorrelationSummary> out(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    out[k].spec = specs[k];
    out[k].tau_mean = stats[k].mean();
    out[k].tau_std = stats[k].stddev();
    out[k].n_examples = stats[k].count;
    out[k].n_skipped = skipped[k];
  }
  return out;
}

EntropySummary entropy_of_fi(const ModelParams& params,
                             const ModelConfig& config,
                             const std::vector<Example>& examples, FISpec spec,
                             std::vector<double>* samples) {
  RunningStats stats;
  std::size_t skipped = 0;
  for (const Example& ex : examples) {
    if (ex.tokens.size() < 2) {
      ++skipped;
      continue;
    }
    try {
      const AttentionTrace trace =
          forward(ex.tokens, params, config, TraceMode::KeepTape);
      const FIDistribution fi = compute_fi(trace, params, config, spec);
      const double h = normalized_entropy(fi);
      stats.add(h);
      if (samples) samples->push_back(h);
    } catch (const DegenerateAttribution&) {
      ++skipped;
    }
  }
  EntropySummary out;
  out.spec = spec;
  out.entropy_mean = stats.mean();
  out.entropy_std = stats.stddev();
  out.n_examples = stats.count;
  out.n_skipped = skipped;
  return out;
}

EntropySummary entropy_of_rep_influence(const ModelParams& params,
                                        const ModelConfig& config,
                                        const std::vector<Example>& examples) {
  RunningStats stats;
  std::size_t skipped = 0;
  for (const Example& ex : examples) {
    if (ex.tokens.size() < 2) {
      ++skipped;
      continue;
    }
    const AttentionTrace trace =
        forward(ex.tokens, params, config, TraceMode::KeepTape);
    RunningStats per_example;
    bool degenerate = false;
    for (std::size_t p = 0; p < trace.length(); ++p) {
      try {
        per_example.add(normalized_entropy(grad_fi_intermediate(trace, p)));
      } catch (const DegenerateAttribution&) {
        degenerate = true;
        break;
      }
    }
    if (degenerate || per_example.count == 0) {
      ++skipped;
    } else {
      stats.add(per_example.mean());
    }
  }
  EntropySummary out;
  out.spec = {FIKind::Gradient, FITarget::Inputs};
  out.entropy_mean = stats.mean();
  out.entropy_std = stats.stddev();
  out.n_examples = stats.count;
  out.n_skipped = skipped;
  return out;
}

SweepResult lambda_sweep(const Corpus& corpus, const ModelConfig& base_config,
                         const TrainConfig& base_train,
                         std::span<const double> lambdas,
                         std::span<const std::uint64_t> seeds,
                         std::size_t jobs) {
  if (lambdas.size() < 2) {
    throw std::invalid_argument("lambda_sweep: need at least two grid points");
  }
  for (double l : lambdas) {
    if (l >= 1.0) {
      throw std::invalid_argument("lambda_sweep: lambda must be < 1");
    }
  }

  SweepResult result;
  result.cells.resize(lambdas.size() * seeds.size());

  auto run_cell = [&](std::size_t index) {
    const double lambda = lambdas[index / seeds.size()];
    const std::uint64_t seed = seeds[index % seeds.size()];
    SweepCell cell;
    cell.lambda = lambda;
    cell.seed = seed;

    ModelConfig config = base_config;
    config.projection = ProjectionKind::sparsegen(lambda);
    config.seed = seed;
    TrainConfig tc = base_train;
    tc.seed = seed;

    try {
      const TrainResult trained = train(corpus, config, tc);
      cell.accuracy = trained.metrics.back().test_accuracy;

      const FISpec grad_spec{FIKind::Gradient, FITarget::Inputs};
      const FISpec loo_spec{FIKind::LeaveOneOut, FITarget::Inputs};
      cell.entropy_mean =
          entropy_of_fi(trained.params, config, corpus.test, grad_spec)
              .entropy_mean;
      const FISpec specs[] = {grad_spec, loo_spec};
      const auto correlations =
          correlate_attention_fi(trained.params, config, corpus.test, specs);
      cell.tau_grad_mean = correlations[0].tau_mean;
      cell.tau_loo_mean = correlations[1].tau_mean;
    } catch (const std::runtime_error&) {
      cell.diverged = true;
    }
    result.cells[index] = cell;
  };

  const std::size_t total = result.cells.size();
  if (jobs <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_cell(i);
  } else {
    std::vector<std::thread> workers;
    std::size_t next = 0;
    std::mutex mutex;
    for (std::size_t w = 0; w < std::min(jobs, total); ++w) {
      workers.emplace_back([&]() {
        while (true) {
          std::size_t index;
          {
            std::lock_guard<std::mutex> lock(mutex);
            if (next >= total) return;
            index = next++;
          }
          run_cell(index);
        }
      });
    }
    for (auto& t : workers) t.join();
  }

  // Per-seed trend of entropy against lambda, skipping diverged cells.
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    std::vector<double> ls, es;
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const SweepCell& cell = result.cells[li * seeds.size() + s];
      if (cell.diverged) continue;
      ls.push_back(cell.lambda);
      es.push_back(cell.entropy_mean);
    }
    SeedTrend trend;
    trend.seed = seeds[s];
    if (ls.size() >= 2) {
      trend.tau_lambda_entropy = kendall_tau_b(ls, es);
      trend.pearson_lambda_entropy = pearson(ls, es);
    }
    result.per_seed.push_back(trend);
  }

  std::vector<double> ls, es;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const SweepCell& cell = result.cells[li * seeds.size() + s];
      if (!cell.diverged) {
        sum += cell.entropy_mean;
        ++count;
      }
    }
    if (count > 0) {
      ls.push_back(lambdas[li]);
      es.push_back(sum / double(count));
    }
  }
  if (ls.size() >= 2) {
    result.overall_tau = kendall_tau_b(ls, es);
    result.overall_pearson = pearson(ls, es);
  }
  return result;
}

}  // namespace attnex
