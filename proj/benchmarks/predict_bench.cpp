#include <benchmark/benchmark.h>

#include "mapseg/design_matrix.hpp"
#include "mapseg/ensembles.hpp"
#include "mapseg/synth.hpp"

using namespace mapseg;

namespace {

struct Fixture {
  std::vector<Tile> tiles;
  FeatureSpec spec = FeatureSpec::defaults(Task::kTask2);

  Fixture() {
    SynthSpec s;
    s.tiles = 6;
    for (int i = 0; i < s.tiles; ++i) tiles.push_back(synth_tile(s, i).tile);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_PredictTile(benchmark::State& state) {
  const auto& f = fixture();
  LearnerConfig config;
  config.kind = static_cast<LearnerKind>(state.range(0));
  const FeatureMatrix m = assemble_design_matrix(std::span(f.tiles).first(5), f.spec, false);
  const TrainedEnsemble model = train(m, config);
  for (auto _ : state) benchmark::DoNotOptimize(predict_tile(model, f.tiles.back(), f.spec));
  state.SetLabel(std::string(learner_name(model.kind)));
}
BENCHMARK(BM_PredictTile)
    ->Arg(static_cast<int>(LearnerKind::kRandomForest))
    ->Arg(static_cast<int>(LearnerKind::kGbdt))
    ->Arg(static_cast<int>(LearnerKind::kLgbm))
    ->Unit(benchmark::kMillisecond);

void BM_AssembleMatrix(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(assemble_design_matrix(f.tiles, f.spec, true));
}
BENCHMARK(BM_AssembleMatrix)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
