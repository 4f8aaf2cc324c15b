#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "protoverb/embedding_store.hpp"

namespace protoverb {

// Gaussian class clusters standing in for exported [MASK] embeddings.
//
// Class n is centred at  offset * e_{D-1} + (separation * sigma / sqrt 2) * e_n,
// so every pair of class means is `separation` standard deviations apart,
// and all classes share a common offset direction (as PLM embeddings do).
// Points add N(0, sigma^2) noise on every axis, except that the last
// `nuisance_dims` axes (the offset axis excluded) carry noise with standard
// deviation nuisance_scale * sigma: high-variance directions that hold no
// class signal, as in anisotropic PLM embedding spaces.
struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  std::size_t train_per_class = 20;
  std::size_t test_per_class = 25;
  double separation = 4.0;
  double sigma = 1.0;
  double offset = 0.0;
  std::size_t nuisance_dims = 0;
  double nuisance_scale = 1.0;
  // Emit per-record label-word log-probs (two words per class) from a noisy
  // cosine-to-centre scorer with this noise level; negative disables.
  double manual_noise = -1.0;
  // vocab_probe tokens: the class name itself plus this many extra words per
  // class near its centre, and `filler_tokens` words near the shared offset.
  std::size_t probe_words_per_class = 0;
  std::size_t filler_tokens = 0;
  std::uint64_t seed = 0;
  std::string template_id = "synthetic";
  std::string model_id = "gaussian-clusters";
  std::vector<std::string> class_names;  // defaults when empty

  void validate() const;  // throws ConfigError
};

EmbeddingDataset make_synthetic_dataset(const SyntheticSpec& spec);

std::vector<std::string> default_class_names(std::size_t n);

}  // namespace protoverb
