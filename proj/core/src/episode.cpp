#include "protoverb/episode.hpp"

#include <numeric>
#include <utility>

#include <nlohmann/json.hpp>

#include "protoverb/errors.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

std::vector<std::vector<std::size_t>> Episode::training_groups() const {
  std::vector<std::vector<std::size_t>> groups(n_way);
  for (const auto& klass : support) {
    for (const auto& record : klass) groups[record.label].push_back(record.record_index);
  }
  return groups;
}

std::size_t Episode::num_corrupted_labels() const {
  std::size_t count = 0;
  for (const auto& klass : support) {
    for (const auto& record : klass) count += record.label != original_labels.at(record.id) ? 1 : 0;
  }
  return count;
}

Episode sample_episode(const EmbeddingDataset& dataset, std::size_t n_way, std::size_t k_shot, std::uint64_t seed) {
  if (n_way < 1 || n_way > dataset.num_classes()) {
    throw ConfigError("n_way must be in [1, " + std::to_string(dataset.num_classes()) + "], got " +
                      std::to_string(n_way));
  }
  if (k_shot < 1) throw ConfigError("k_shot must be >= 1");

  const auto by_class = dataset.indices_by_class(Split::kTrain);
  Episode episode;
  episode.n_way = n_way;
  episode.k_shot = k_shot;
  episode.seed = seed;
  episode.support.resize(n_way);

  for (std::size_t n = 0; n < n_way; ++n) {
    auto pool = by_class[n];
    if (pool.size() < k_shot) {
      throw DataError("class '" + dataset.header.class_names[n] + "' has " + std::to_string(pool.size()) +
                      " train records, need k_shot=" + std::to_string(k_shot));
    }
    Rng rng(derive_seed(seed, n));
    for (std::size_t i = 0; i < k_shot; ++i) {
      const std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      const auto& record = dataset.records[pool[i]];
      episode.support[n].push_back({pool[i], record.id, n});
      episode.original_labels[record.id] = n;
    }
  }
  return episode;
}

Episode inject_noise(const Episode& episode, std::size_t m, std::uint64_t corruption_seed) {
  const std::size_t total = episode.n_way * episode.k_shot;
  if (m > total) {
    throw ConfigError("noise count " + std::to_string(m) + " exceeds support size " + std::to_string(total));
  }
  if (m > 0 && episode.n_way < 2) throw ConfigError("label noise needs at least two classes");

  Episode out = episode;
  out.noise = {m, corruption_seed};
  for (auto& klass : out.support) {
    for (auto& record : klass) record.label = out.original_labels.at(record.id);
  }

  // Flat positions in class-major order.
  std::vector<std::size_t> positions(total);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  Rng rng(corruption_seed);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.uniform_index(total - i);
    std::swap(positions[i], positions[j]);
    auto& record = out.support[positions[i] / out.k_shot][positions[i] % out.k_shot];
    // Uniform over the n_way - 1 other classes: draw r in [0, n_way-1) and skip the original.
    const auto r = static_cast<std::size_t>(rng.uniform_index(out.n_way - 1));
    record.label = r >= record.label ? r + 1 : r;
  }
  return out;
}

nlohmann::json episode_to_json(const Episode& episode) {
  nlohmann::json support = nlohmann::json::array();
  for (std::size_t n = 0; n < episode.support.size(); ++n) {
    for (const auto& record : episode.support[n]) {
      support.push_back({{"id", record.id}, {"original_label", n}, {"label", record.label}});
    }
  }
  return {{"n_way", episode.n_way},
          {"k_shot", episode.k_shot},
          {"seed", episode.seed},
          {"noise", {{"num_corrupted", episode.noise.num_corrupted}, {"corruption_seed", episode.noise.corruption_seed}}},
          {"support", std::move(support)}};
}

}  // namespace protoverb
