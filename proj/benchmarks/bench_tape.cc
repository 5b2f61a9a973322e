#include <benchmark/benchmark.h>

#include "attnex/model.hpp"
#include "attnex/rng.hpp"
#include "attnex/tape.hpp"

using namespace attnex;

namespace {

ModelConfig bench_config(EncoderKind enc) {
  ModelConfig c;
  c.encoder = enc;
  c.alignment = AlignmentKind::Additive;
  c.projection = ProjectionKind::softmax();
  c.embedding_dim = 64;
  c.rep_dim = 64;
  c.align_hidden_dim = 64;
  c.vocab_size = 200;
  c.seed = 1;
  return c;
}

std::vector<std::size_t> bench_tokens(std::size_t n) {
  Rng rng(7);
  std::vector<std::size_t> tokens(n);
  for (auto& t : tokens) t = rng.below(200);
  return tokens;
}

}  // namespace

static void BM_ForwardBiLstm(benchmark::State& state) {
  const ModelConfig config = bench_config(EncoderKind::BiLstm);
  const ModelParams params = init_params(config);
  const auto tokens = bench_tokens(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(tokens, params, config));
  }
}
BENCHMARK(BM_ForwardBiLstm)->Arg(10)->Arg(20)->Arg(40);

static void BM_ForwardTransformer(benchmark::State& state) {
  const ModelConfig config = bench_config(EncoderKind::Transformer);
  const ModelParams params = init_params(config);
  const auto tokens = bench_tokens(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(tokens, params, config));
  }
}
BENCHMARK(BM_ForwardTransformer)->Arg(10)->Arg(20)->Arg(40);

static void BM_ForwardBackwardBiLstm(benchmark::State& state) {
  const ModelConfig config = bench_config(EncoderKind::BiLstm);
  const ModelParams params = init_params(config);
  const auto tokens = bench_tokens(std::size_t(state.range(0)));
  for (auto _ : state) {
    Tape tape;
    const BoundParams bound = bind_params(tape, params, config);
    const ForwardNodes nodes = build_forward(tape, bound, config, tokens);
    const NodeId loss = tape.bce_with_logits(nodes.logit, 1.0);
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(bound.embedding));
  }
}
BENCHMARK(BM_ForwardBackwardBiLstm)->Arg(10)->Arg(20);
