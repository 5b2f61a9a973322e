#include <benchmark/benchmark.h>

#include "attnex/analysis.hpp"
#include "attnex/rng.hpp"

using namespace attnex;

namespace {

std::vector<double> tied_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = double(int(rng.normal() * 3.0)) / 3.0;
  return v;
}

}  // namespace

static void BM_KendallTauB(benchmark::State& state) {
  const std::size_t n = std::size_t(state.range(0));
  const auto u = tied_vector(n, 1);
  const auto v = tied_vector(n, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kendall_tau_b(u, v));
  }
}
BENCHMARK(BM_KendallTauB)->Arg(20)->Arg(200)->Arg(2000);

static void BM_Jsd(benchmark::State& state) {
  Rng rng(3);
  const std::size_t n = std::size_t(state.range(0));
  DenseArray a({n}), b({n});
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform() + 0.01;
    b[i] = rng.uniform() + 0.01;
  }
  const double sa = a.sum(), sb = b.sum();
  for (std::size_t i = 0; i < n; ++i) {
    a[i] /= sa;
    b[i] /= sb;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(jsd(a.data(), b.data()));
  }
}
BENCHMARK(BM_Jsd)->Arg(20)->Arg(200)->Arg(2000);

BENCHMARK_MAIN();
