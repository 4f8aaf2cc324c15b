#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manifest.hpp"

namespace protoverb::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitNumerical = 3,
};

struct ValidateOptions {
  std::string dataset;
};

struct SampleOptions {
  std::string dataset;
  std::size_t n_way = 0;  // 0: all classes
  std::size_t k_shot = 8;
  std::uint64_t seed = 0;
  std::size_t noise = 0;
  std::optional<std::uint64_t> noise_seed;
  std::string out;  // empty: stdout
};

struct TrainOptions {
  std::string dataset;
  std::size_t n_way = 0;
  std::size_t k_shot = 8;
  std::uint64_t seed = 0;
  std::string variant = "full";
  std::size_t steps = 200;
  double learning_rate = 0.01;
  std::size_t prototype_dim = 128;
  double init_scale = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t noise = 0;
  std::optional<std::uint64_t> noise_seed;
  std::string template_id;  // when set, must match the dataset header
  std::string out;
};

struct EvalOptions {
  std::string dataset;
  std::string checkpoint;
  std::vector<std::string> scorers{"proto"};
  std::string template_id;
  std::string out;
  std::string predictions;  // optional NDJSON
  std::size_t jobs = 1;
};

struct GridOptions {
  std::vector<std::string> datasets;
  std::vector<std::size_t> k_values{1, 2, 4, 8, 16};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<std::size_t> noise_levels{0};
  std::vector<std::string> variants{"full"};
  std::vector<std::string> templates;  // filter; empty: every dataset
  std::size_t n_way = 0;
  std::size_t steps = 200;
  double learning_rate = 0.01;
  std::size_t prototype_dim = 128;
  double init_scale = 1.0;
  bool manual = false;
  std::size_t jobs = 1;
  std::string out_dir;
};

struct ProbeOptions {
  std::string checkpoint;
  std::string vocab;
  std::size_t top_k = 10;
  std::string out;  // empty: stdout
};

struct SimilarityOptions {
  std::vector<std::string> checkpoints;
  std::string vocab;
  std::string verbalizer;  // JSON {"class": ["word", ...]}; empty: class names
  std::string out;         // empty: stdout
};

struct SynthOptions {
  std::size_t classes = 4;
  std::size_t dim = 16;
  std::size_t train_per_class = 20;
  std::size_t test_per_class = 25;
  double separation = 4.0;
  double sigma = 1.0;
  double offset = 0.0;
  std::size_t nuisance_dims = 0;
  double nuisance_scale = 1.0;
  double manual_noise = -1.0;
  std::size_t probe_words = 0;
  std::size_t filler_tokens = 0;
  std::uint64_t seed = 0;
  std::string template_id = "synthetic";
  std::string model_id = "gaussian-clusters";
  std::string out;
};

nlohmann::json to_json(const ValidateOptions& o);
nlohmann::json to_json(const SampleOptions& o);
nlohmann::json to_json(const TrainOptions& o);
nlohmann::json to_json(const EvalOptions& o);
nlohmann::json to_json(const GridOptions& o);
nlohmann::json to_json(const ProbeOptions& o);
nlohmann::json to_json(const SimilarityOptions& o);
nlohmann::json to_json(const SynthOptions& o);

// Each command throws protoverb::Error subclasses on failure and returns the
// exit code otherwise. Inputs are registered with the manifest as they are read.
int cmd_validate(const ValidateOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_sample(const SampleOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_train(const TrainOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_eval(const EvalOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_grid(const GridOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_probe(const ProbeOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_similarity(const SimilarityOptions& o, RunManifest& manifest, std::ostream& out);
int cmd_synth(const SynthOptions& o, RunManifest& manifest, std::ostream& out);

}  // namespace protoverb::cli
