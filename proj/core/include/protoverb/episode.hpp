#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "protoverb/embedding_store.hpp"

namespace protoverb {

struct NoiseSpec {
  std::size_t num_corrupted = 0;
  std::uint64_t corruption_seed = 0;

  bool operator==(const NoiseSpec&) const = default;
};

struct SupportRecord {
  std::size_t record_index = 0;  // index into EmbeddingDataset::records
  std::string id;
  std::size_t label = 0;  // training label, possibly corrupted

  bool operator==(const SupportRecord&) const = default;
};

// An N-way K-shot support set. `support[n]` holds the K records whose true
// class is n; their `label` differs from n only after noise injection.
struct Episode {
  std::size_t n_way = 0;
  std::size_t k_shot = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<SupportRecord>> support;
  NoiseSpec noise;
  std::map<std::string, std::size_t> original_labels;

  // Record indices grouped by training label, ordered by (true class, draw).
  std::vector<std::vector<std::size_t>> training_groups() const;
  std::size_t num_corrupted_labels() const;

  bool operator==(const Episode&) const = default;
};

// Draws k_shot train records per class from classes [0, n_way) without
// replacement. Within a class, a partial Fisher-Yates shuffle over the class's
// train records (file order) picks the support; the class-n stream is seeded
// with derive_seed(seed, n). Throws ConfigError on bad n_way / k_shot and
// DataError when a class has fewer than k_shot train records.
Episode sample_episode(const EmbeddingDataset& dataset, std::size_t n_way, std::size_t k_shot, std::uint64_t seed);

// Relabels exactly m support records, chosen uniformly without replacement,
// each with a label drawn uniformly from the n_way - 1 wrong classes.
// Corruption is always applied relative to the original labels, so injecting
// into an already-noisy episode replaces the previous corruption.
// Throws ConfigError when m > n_way * k_shot, or m > 0 with n_way < 2.
Episode inject_noise(const Episode& episode, std::size_t m, std::uint64_t corruption_seed);

nlohmann::json episode_to_json(const Episode& episode);

}  // namespace protoverb
