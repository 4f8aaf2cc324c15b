#pragma once

// Experiment grids (ablation, label-noise sweeps), vocabulary probing of
// learned prototypes, and prototype-to-label-word similarity.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "protoverb/embedding_store.hpp"
#include "protoverb/encoder.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/trainer.hpp"

namespace protoverb {

struct ExperimentGrid {
  std::vector<std::size_t> k_values{1};
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::size_t> noise_levels{0};
  std::vector<LossVariant> loss_variants{LossVariant::kFull};
  std::vector<std::string> templates;  // empty: whatever template the dataset carries

  void validate() const;  // throws ConfigError
};

struct ExperimentSettings {
  std::size_t n_way = 0;  // 0: every class of the dataset
  TrainConfig train;      // seed and loss_variant are overridden per cell
  bool use_manual = false;
  std::size_t jobs = 1;
};

struct CellSpec {
  std::string template_id;
  std::size_t k_shot = 0;
  std::uint64_t seed = 0;
  LossVariant variant = LossVariant::kFull;
  std::size_t noise = 0;

  auto operator<=>(const CellSpec&) const = default;
};

struct CellOutcome {
  CellSpec spec;
  double accuracy = 0.0;
  std::vector<std::optional<double>> per_class;
  std::size_t n_test = 0;
};

// Seeds used inside a cell. The episode and the training init use the cell
// seed; label corruption uses derive_seed(seed, kNoiseStream), independent of
// m, so the m=1 corruption is a prefix of the m=3 one on the same episode.
inline constexpr std::uint64_t kNoiseStream = 0x6E6F697365ULL;

// Cells in canonical order: template, k, seed, variant, noise.
std::vector<CellSpec> enumerate_cells(const ExperimentGrid& grid, const std::string& default_template);

// sample -> corrupt -> train -> evaluate on the whole test split.
CellOutcome run_cell(const EmbeddingDataset& dataset, const CellSpec& cell, const ExperimentSettings& settings);

// Runs cells on up to settings.jobs threads; results follow `cells` order.
std::vector<CellOutcome> run_cells(const EmbeddingDataset& dataset, std::span<const CellSpec> cells,
                                   const ExperimentSettings& settings);

struct SummaryStats {
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t count = 0;
};

SummaryStats summarize(std::span<const double> values);

struct AblationRow {
  std::size_t k_shot = 0;
  LossVariant variant = LossVariant::kFull;
  SummaryStats accuracy;
  std::vector<double> per_seed;  // grid seed order
};

struct AblationTable {
  std::vector<AblationRow> rows;  // k ascending, then variant in grid order
  std::vector<CellOutcome> cells;
};

// Every (k, seed, variant) at noise 0; per-cell mean and std over seeds.
AblationTable run_ablation(const EmbeddingDataset& dataset, const ExperimentGrid& grid,
                           const ExperimentSettings& settings);

// Builds the table from already-computed cells (noise-0 cells of one template).
AblationTable summarize_ablation(std::vector<CellOutcome> cells, const ExperimentGrid& grid);

struct NoiseRow {
  std::size_t k_shot = 0;
  std::size_t noise = 0;
  SummaryStats drop;
  std::vector<double> per_seed_drop;  // clean accuracy minus noisy accuracy, same seed
};

struct NoiseTable {
  LossVariant variant = LossVariant::kFull;
  std::vector<NoiseRow> rows;  // k ascending, then m ascending (m = 0 always present)
  std::vector<CellOutcome> cells;
};

// Accuracy drop against the same-seed clean run, for settings.train.loss_variant.
// Throws ConfigError when some m >= k * n_way.
NoiseTable run_noise_sweep(const EmbeddingDataset& dataset, const ExperimentGrid& grid,
                           const ExperimentSettings& settings);

// Builds the table from already-computed cells of one template and variant;
// every (k, seed) needs its m = 0 cell.
NoiseTable summarize_noise(std::vector<CellOutcome> cells, const ExperimentGrid& grid, LossVariant variant);

struct ProbeEntry {
  std::string token;
  double score = 0.0;
};

struct ProbeReport {
  std::size_t top_k = 0;
  std::vector<std::string> class_names;
  std::vector<std::vector<ProbeEntry>> per_class;  // score descending, ties by token ascending
};

// Projects each probe embedding and ranks probes per class by cosine to the
// prototype. Probe records are identified by `token`, falling back to `id`.
// Throws DataError on an empty probe set or a dimension mismatch.
ProbeReport probe_vocabulary(const ProjectionEncoder& encoder, const PrototypeSet& prototypes,
                             std::span<const EmbeddingRecord> probes, std::size_t top_k,
                             std::vector<std::string> class_names = {});

// Entry (i, j) = softmax over j of S(c_i, mean_j), where mean_j is the mean
// projected embedding of class j's label words. Rows sum to 1.
// Throws DataError when a class has no words.
Matrix proto_manual_similarity(const ProjectionEncoder& encoder, const PrototypeSet& prototypes,
                               const std::vector<std::vector<std::vector<double>>>& word_embeddings);

// Elementwise mean of per-seed similarity matrices.
Matrix average_matrices(std::span<const Matrix> matrices);

nlohmann::json cell_to_json(const CellOutcome& cell);
nlohmann::json ablation_to_json(const AblationTable& table);
nlohmann::json noise_to_json(const NoiseTable& table);
nlohmann::json probe_entry_json(const ProbeReport& report, std::size_t class_index);
std::string probe_to_ndjson(const ProbeReport& report);

// "k,seed,variant,m,accuracy" rows for external plotting tools.
std::string cells_to_long_csv(std::span<const CellOutcome> cells);
std::string ablation_to_csv(const AblationTable& table);
std::string noise_to_csv(const NoiseTable& table);

}  // namespace protoverb
