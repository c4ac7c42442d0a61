// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "cpnlp/icp.hpp"
#include "cpnlp/icp_kernels.hpp"
#include "cpnlp/synthetic.hpp"

using namespace cpnlp;

namespace {

struct Fixture {
  CalibrationModel cal;
  std::vector<ScoredExample> test;
};

const Fixture& fixture(std::size_t n_cal, std::size_t n_test, std::size_t n_classes) {
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Fixture> cache;
  auto key = std::make_tuple(n_cal, n_test, n_classes);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  SyntheticSpec spec;
  spec.n_classes = n_classes;
  spec.n_cal = n_cal;
  spec.n_test = n_test;
  spec.seed = 5;
  auto data = generate_synthetic(spec);
  Fixture f{calibrate(data.cal), std::move(data.test)};
  return cache.emplace(key, std::move(f)).first->second;
}

void BM_PMatrixSerial(benchmark::State& state) {
  const auto& f = fixture(state.range(0), 5000, state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(reference::p_matrix(f.cal, f.test));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.test.size()));
}

void BM_PMatrixParallel(benchmark::State& state) {
  const auto& f = fixture(state.range(0), 5000, state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(parallel::p_matrix(f.cal, f.test));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.test.size()));
}

void BM_CountNaive(benchmark::State& state) {
  const auto& f = fixture(state.range(0), 1, 2);
  double a = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::naive_count_at_least(f.cal.alphas(), a));
    a = a > 0.99 ? 0.0 : a + 0.01;
  }
}

void BM_CountBinarySearch(benchmark::State& state) {
  const auto& f = fixture(state.range(0), 1, 2);
  double a = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.cal.count_at_least(a));
    a = a > 0.99 ? 0.0 : a + 0.01;
  }
}

}  // namespace

BENCHMARK(BM_PMatrixSerial)->Args({1000, 10})->Args({10000, 190})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PMatrixParallel)->Args({1000, 10})->Args({10000, 190})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CountNaive)->Arg(1000)->Arg(100000);
BENCHMARK(BM_CountBinarySearch)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
