#include <benchmark/benchmark.h>

#include "attnex/projections.hpp"
#include "attnex/rng.hpp"
#include "attnex/simplex_oracle.hpp"

using namespace attnex;

namespace {

DenseArray scores_of_size(std::size_t n) {
  Rng rng(99);
  DenseArray z({n});
  for (std::size_t i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

static void BM_Softmax(benchmark::State& state) {
  const DenseArray z = scores_of_size(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(softmax(z));
  }
}
BENCHMARK(BM_Softmax)->Arg(8)->Arg(64)->Arg(512);

static void BM_Sparsemax(benchmark::State& state) {
  const DenseArray z = scores_of_size(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sparsemax(z));
  }
}
BENCHMARK(BM_Sparsemax)->Arg(8)->Arg(64)->Arg(512);

static void BM_Sparsegen(benchmark::State& state) {
  const DenseArray z = scores_of_size(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sparsegen(z, 0.5));
  }
}
BENCHMARK(BM_Sparsegen)->Arg(8)->Arg(64)->Arg(512);

static void BM_QpOracle(benchmark::State& state) {
  const DenseArray z = scores_of_size(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simplex_qp_oracle(z, 0.5));
  }
}
BENCHMARK(BM_QpOracle)->Arg(4)->Arg(8)->Arg(12);
