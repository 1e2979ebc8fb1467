#include <random>

#include <benchmark/benchmark.h>

#include "pscd/kernels.hpp"

using namespace pscd;

namespace {

DescriptorMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> data(rows * dim);
  for (auto& v : data) v = u(rng);
  return DescriptorMatrix(dim, std::move(data));
}

// Arguments: query rows, pool rows. Descriptors are 16-D.
template <class Fn>
void run(benchmark::State& state, Fn fn) {
  const auto q = random_matrix(static_cast<std::size_t>(state.range(0)), 16, 1);
  const auto p = random_matrix(static_cast<std::size_t>(state.range(1)), 16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fn(q, p));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

void BM_NearestL2(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::nearest(q, p, Metric::L2); });
}
void BM_NearestL2Serial(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::serial::nearest(q, p, Metric::L2); });
}
void BM_NearestL1(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::nearest(q, p, Metric::L1); });
}
void BM_NearestL1Serial(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::serial::nearest(q, p, Metric::L1); });
}
void BM_FarthestL2(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::farthest_l2(q, p); });
}
void BM_FarthestL2Serial(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::serial::farthest_l2(q, p); });
}
void BM_NbnnL1(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::nbnn_l1(q, p); });
}
void BM_NbnnL1Serial(benchmark::State& s) {
  run(s, [](const auto& q, const auto& p) { return kernels::serial::nbnn_l1(q, p); });
}

void sizes(benchmark::internal::Benchmark* b) {
  b->Args({100, 100})->Args({100, 2000})->Args({1000, 2000});
}

}  // namespace

BENCHMARK(BM_NearestL2)->Apply(sizes);
BENCHMARK(BM_NearestL2Serial)->Apply(sizes);
BENCHMARK(BM_NearestL1)->Apply(sizes);
BENCHMARK(BM_NearestL1Serial)->Apply(sizes);
BENCHMARK(BM_FarthestL2)->Apply(sizes);
BENCHMARK(BM_FarthestL2Serial)->Apply(sizes);
BENCHMARK(BM_NbnnL1)->Apply(sizes);
BENCHMARK(BM_NbnnL1Serial)->Apply(sizes);

BENCHMARK_MAIN();
