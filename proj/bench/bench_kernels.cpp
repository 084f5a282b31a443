// Serial reference vs OpenMP kernels: GEMM and a full batch step.

#include <benchmark/benchmark.h>

#include <vector>

#include "pssp/augment.hpp"
#include "pssp/kernels.hpp"
#include "pssp/model.hpp"
#include "pssp/ops.hpp"
#include "pssp/random.hpp"

namespace {

using namespace pssp;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = uniform_real(rng, -1.0, 1.0);
  return v;
}

template <bool Parallel>
void BM_GemmNN(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  const auto a = random_vector(m * k, 1), b = random_vector(k * n, 2);
  std::vector<double> c(m * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      nn::kernels::parallel::gemm_nn(m, k, n, a, b, c);
    } else {
      nn::kernels::serial::gemm_nn(m, k, n, a, b, c);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * m * k * n));
}

// Shapes seen in training: a 32 x 15 batch through the 64/128 projections,
// plus one large square product.
#define GEMM_SHAPES Args({480, 64, 64})->Args({480, 64, 128})->Args({480, 128, 64})->Args({512, 512, 512})
BENCHMARK(BM_GemmNN<false>)->GEMM_SHAPES;
BENCHMARK(BM_GemmNN<true>)->GEMM_SHAPES;

model::TokenBatch make_batch(std::size_t b, std::size_t l) {
  Rng rng(7);
  model::TokenBatch batch;
  batch.batch = b;
  batch.length = l;
  for (std::size_t i = 0; i < b * l; ++i) {
    batch.tokens.push_back(static_cast<TokenId>(2 + uniform_index(rng, 20)));
    batch.mask.push_back(1);
    batch.labels.push_back(static_cast<std::int32_t>(uniform_index(rng, 3)));
  }
  return batch;
}

template <model::Exec E>
void BM_TrainStep(benchmark::State& state) {
  const auto params = model::init_params(model::ModelConfig{});
  const auto batch = make_batch(static_cast<std::size_t>(state.range(0)), kDefaultWindow);
  std::vector<model::Parameters> scratch;
  auto grads = model::zeros_like(params);
  for (auto _ : state) {
    const auto pass = model::forward(params, batch, model::Mode::Train, E);
    const auto loss = nn::sparse_ce_loss(pass.logits, batch.labels);
    model::backward_into(pass, loss.grad_logits, E, scratch, grads);
    benchmark::DoNotOptimize(grads.head_b.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_TrainStep<model::Exec::Serial>)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainStep<model::Exec::Parallel>)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
