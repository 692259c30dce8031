#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "mapseg/design_matrix.hpp"
#include "mapseg/trees.hpp"

using namespace mapseg;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t features) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> v(0.0f, 255.0f);
  FeatureMatrix m;
  for (std::size_t f = 0; f < features; ++f) m.columns.push_back("f" + std::to_string(f));
  m.values.resize(rows * features);
  m.labels.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) m.values[r * features + f] = v(rng);
    m.labels[r] = m.values[r * features] + 0.5f * m.values[r * features + 1] > 190.0f ? 1 : 0;
  }
  return m;
}

void BM_BestSplitGrad(benchmark::State& state) {
  const auto rows_n = static_cast<std::size_t>(state.range(0));
  const FeatureMatrix m = random_matrix(rows_n, 5);
  const BinnedMatrix data = bin_matrix(m, build_bins(m));
  std::vector<std::uint32_t> rows(rows_n);
  std::iota(rows.begin(), rows.end(), 0u);
  std::vector<double> grad(rows_n), hess(rows_n, 0.25);
  for (std::size_t r = 0; r < rows_n; ++r) grad[r] = 0.5 - m.labels[r];
  const std::vector<int> features{0, 1, 2, 3, 4};
  const auto crit = SplitCriterion::grad_gain(1.0, 0.0, 0.0, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(best_split(data, rows, {m.labels, grad, hess}, crit, features));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows_n));
}
BENCHMARK(BM_BestSplitGrad)->Arg(4096)->Arg(65536)->Arg(250000);

void BM_BuildBins(benchmark::State& state) {
  const FeatureMatrix m = random_matrix(65536, 5);
  for (auto _ : state) benchmark::DoNotOptimize(build_bins(m));
}
BENCHMARK(BM_BuildBins);

}  // namespace

BENCHMARK_MAIN();
