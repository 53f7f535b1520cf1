// Serial reference vs OpenMP kernels. Arg 0 selects serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <span>
#include <vector>

#include "mode/kernels.hpp"
#include "mode/models.hpp"
#include "mode/rng.hpp"
#include "mode/scm.hpp"

using namespace mode;

namespace {

bool parallel(const benchmark::State& state) { return state.range(0) == 1; }

void BM_SampleNodes(benchmark::State& state) {
  const Scm scm = make_g1();
  const std::size_t n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    auto m = parallel(state) ? kernels::parallel::sample_nodes(scm.compiled(), n, 1)
                             : kernels::serial::sample_nodes(scm.compiled(), n, 1);
    benchmark::DoNotOptimize(m.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_ConditionalMoments(benchmark::State& state) {
  const Scm scm = make_g1();
  const kernels::ExactCondition cond{{static_cast<std::uint32_t>(scm.index_of("X1")), 1.0}};
  const auto y = static_cast<std::uint32_t>(scm.outcome_index());
  const kernels::Statistic id = [](double v) { return v; };
  const std::size_t n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    auto m = parallel(state) ? kernels::parallel::conditional_moments(scm.compiled(), cond, y, id, n, 2)
                             : kernels::serial::conditional_moments(scm.compiled(), cond, y, id, n, 2);
    benchmark::DoNotOptimize(m.sum);
  }
}

void BM_Covariance(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(1));
  std::vector<std::vector<double>> data(8, std::vector<double>(n));
  rng::Stream s(3);
  for (auto& col : data)
    for (auto& v : col) v = s.normal();
  std::vector<std::span<const double>> cols(data.begin(), data.end());
  for (auto _ : state) {
    auto c = parallel(state) ? kernels::parallel::covariance(cols) : kernels::serial::covariance(cols);
    benchmark::DoNotOptimize(c.data());
  }
}

void BM_Contingency(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(1));
  std::vector<std::uint32_t> x(n), y(n), z(n);
  rng::Stream s(4);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<std::uint32_t>(s.below(2));
    y[i] = static_cast<std::uint32_t>(s.below(2));
    z[i] = static_cast<std::uint32_t>(s.below(8));
  }
  for (auto _ : state) {
    auto c = parallel(state) ? kernels::parallel::contingency(x, 2, y, 2, z, 8)
                             : kernels::serial::contingency(x, 2, y, 2, z, 8);
    benchmark::DoNotOptimize(c.counts.data());
  }
}

void BM_ForestTraining(benchmark::State& state) {
  const auto data = sample(make_wine(0), static_cast<std::size_t>(state.range(1)), 5);
  ModelSpec spec;
  spec.n_trees = 50;
  spec.seed = 6;
  const auto exec = parallel(state) ? kernels::Exec::Parallel : kernels::Exec::Serial;
  for (auto _ : state) {
    auto m = train(spec, data, exec);
    benchmark::DoNotOptimize(m.trees().data());
  }
}

}  // namespace

BENCHMARK(BM_SampleNodes)->ArgsProduct({{0, 1}, {100000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConditionalMoments)->ArgsProduct({{0, 1}, {200000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Covariance)->ArgsProduct({{0, 1}, {100000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Contingency)->ArgsProduct({{0, 1}, {1000000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForestTraining)->ArgsProduct({{0, 1}, {5000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
