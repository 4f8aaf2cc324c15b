#include <benchmark/benchmark.h>

#include "protoverb/analysis.hpp"
#include "protoverb/synthetic.hpp"
#include "protoverb/trainer.hpp"

namespace {

using namespace protoverb;

// One 200-step training run on a 4-way episode. Args: K, D.
void BM_TrainEpisode(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dim = static_cast<std::size_t>(state.range(1));
  spec.train_per_class = 16;
  spec.test_per_class = 0;
  const auto ds = make_synthetic_dataset(spec);
  const auto episode = sample_episode(ds, 4, static_cast<std::size_t>(state.range(0)), 0);
  const TrainConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds, episode, config));
}
BENCHMARK(BM_TrainEpisode)->Args({1, 16})->Args({8, 16})->Args({16, 16})->Args({16, 256})->Unit(benchmark::kMillisecond);

// A full grid cell: sample, train, evaluate 400 test records.
void BM_GridCell(benchmark::State& state) {
  SyntheticSpec spec;
  spec.dim = 32;
  spec.train_per_class = 16;
  spec.test_per_class = 100;
  const auto ds = make_synthetic_dataset(spec);
  const CellSpec cell{"synthetic", 8, 0, LossVariant::kFull, 0};
  const ExperimentSettings settings;
  for (auto _ : state) benchmark::DoNotOptimize(run_cell(ds, cell, settings));
}
BENCHMARK(BM_GridCell)->Unit(benchmark::kMillisecond);

}  // namespace
