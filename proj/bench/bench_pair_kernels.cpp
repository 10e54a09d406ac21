#include <benchmark/benchmark.h>

#include <cmath>

#include "degenlap/pair_kernels.hpp"

namespace {

double term(std::size_t i, std::size_t j) {
  const double d = static_cast<double>(i) - static_cast<double>(j);
  return 1.0 / std::pow(std::abs(d), 1.5);
}

void BM_parallel_upper(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(degenlap::pairsum::parallel::upper(n, term));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * (n - 1) / 2));
}

void BM_reference_upper(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(degenlap::pairsum::reference::upper(n, term));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * (n - 1) / 2));
}

void BM_parallel_ordered(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(degenlap::pairsum::parallel::ordered(n, term));
}

void BM_reference_ordered(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(degenlap::pairsum::reference::ordered(n, term));
}

} // namespace

BENCHMARK(BM_parallel_upper)->Arg(512)->Arg(2048);
BENCHMARK(BM_reference_upper)->Arg(512)->Arg(2048);
BENCHMARK(BM_parallel_ordered)->Arg(512)->Arg(2048);
BENCHMARK(BM_reference_ordered)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
