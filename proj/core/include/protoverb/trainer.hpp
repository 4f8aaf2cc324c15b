#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "protoverb/adam.hpp"
#include "protoverb/embedding_store.hpp"
#include "protoverb/encoder.hpp"
#include "protoverb/episode.hpp"
#include "protoverb/losses.hpp"

namespace protoverb {

inline constexpr std::size_t kDefaultSteps = 200;
inline constexpr double kDefaultLearningRate = 0.01;

struct TrainConfig {
  std::size_t steps = kDefaultSteps;
  double learning_rate = kDefaultLearningRate;
  std::uint64_t seed = 0;
  LossVariant loss_variant = LossVariant::kFull;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double init_scale = 1.0;
  std::size_t prototype_dim = kDefaultPrototypeDim;

  void validate() const;  // throws ConfigError
  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }
};

struct LossTraceEntry {
  std::size_t step = 0;
  LossBreakdown loss;

  bool operator==(const LossTraceEntry&) const = default;
};

struct TrainResult {
  ProjectionEncoder encoder;
  PrototypeSet prototypes;
  // Loss at the parameters each update was computed from (one per step).
  std::vector<LossTraceEntry> loss_trace;
};

// Seeded initialization. W entries are uniform in +-init_scale/sqrt(D) drawn
// row-major from stream derive_seed(seed, 1). Prototype n is drawn from its own
// stream keyed by FNV-1a of its class name, so relabeling classes permutes the
// initial prototypes with them.
ProjectionEncoder init_encoder(std::size_t input_dim, const TrainConfig& config);
PrototypeSet init_prototypes(const std::vector<std::string>& class_names, std::size_t input_dim,
                             const TrainConfig& config);

// Raw embeddings of the episode's support grouped by training label.
std::vector<std::vector<Vector>> support_embeddings(const EmbeddingDataset& dataset, const Episode& episode);

// Full-batch training of W and the prototypes with Adam. Under
// kInstanceMean no optimization happens: prototype n is the mean of the
// projected class-n instances under the initial encoder.
// `class_names` must hold one name per group.
TrainResult train(const std::vector<std::vector<Vector>>& raw_groups, const std::vector<std::string>& class_names,
                  const TrainConfig& config);
TrainResult train(const EmbeddingDataset& dataset, const Episode& episode, const TrainConfig& config);

}  // namespace protoverb
