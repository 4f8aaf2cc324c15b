#include <benchmark/benchmark.h>

#include "protoverb/gradients.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/rng.hpp"

namespace {

using namespace protoverb;

std::vector<std::vector<Vector>> random_groups(std::size_t n, std::size_t k, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<Vector>> groups(n);
  for (auto& g : groups) {
    for (std::size_t i = 0; i < k; ++i) {
      Vector v(static_cast<Eigen::Index>(d));
      for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.normal();
      g.push_back(v);
    }
  }
  return groups;
}

PrototypeSet random_prototypes(std::size_t n, std::size_t d) {
  Rng rng(99);
  PrototypeSet p{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d))};
  for (Eigen::Index i = 0; i < p.prototypes.size(); ++i) p.prototypes.data()[i] = rng.normal();
  return p;
}

// Args: N, K. Projections live in 128 dims.
void BM_TotalLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto groups = random_groups(n, k, 128, 1);
  const auto protos = random_prototypes(n, 128);
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(groups, protos));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * k));
}
BENCHMARK(BM_TotalLoss)->Args({4, 1})->Args({4, 8})->Args({4, 16})->Args({14, 16});

// Args: N, K, D (raw dim).
void BM_LossGradients(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto d = static_cast<std::size_t>(state.range(2));
  const auto batch = PackedBatch::from_groups(random_groups(n, k, d, 2));
  Rng rng(3);
  ProjectionEncoder enc{Matrix(128, static_cast<Eigen::Index>(d))};
  for (Eigen::Index i = 0; i < enc.weight.size(); ++i) enc.weight.data()[i] = rng.normal();
  const auto protos = random_prototypes(n, 128);
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradients(batch, enc, protos));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * k));
}
BENCHMARK(BM_LossGradients)->Args({4, 8, 32})->Args({4, 16, 768})->Args({14, 16, 1024});

}  // namespace
