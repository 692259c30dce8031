#include <benchmark/benchmark.h>

#include <random>

#include "mapseg/metrics.hpp"
#include "mapseg/morphology.hpp"

using namespace mapseg;

namespace {

Mask blocks(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pos(0, n - 1), size(8, n / 4);
  Mask m(n, n);
  for (int b = 0; b < n / 16; ++b) {
    const int r0 = pos(rng), c0 = pos(rng), h = size(rng), w = size(rng);
    for (int r = r0; r < std::min(n, r0 + h); ++r)
      for (int c = c0; c < std::min(n, c0 + w); ++c) m(r, c) = 1;
  }
  return m;
}

void BM_Erode(benchmark::State& state) {
  const Mask m = blocks(500, 1);
  const StructuringElement se(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(erode(m, se));
  state.SetItemsProcessed(state.iterations() * 500 * 500);
}
BENCHMARK(BM_Erode)->Arg(3)->Arg(7)->Arg(15);

void BM_Biou(benchmark::State& state) {
  const Mask gt = blocks(500, 2);
  const Mask pred = blocks(500, 3);
  for (auto _ : state) benchmark::DoNotOptimize(biou(gt, pred, 3));
}
BENCHMARK(BM_Biou);

}  // namespace

BENCHMARK_MAIN();
