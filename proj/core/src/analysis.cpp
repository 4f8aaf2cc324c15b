#include "protoverb/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "protoverb/episode.hpp"
#include "protoverb/errors.hpp"
#include "protoverb/parallel.hpp"
#include "protoverb/rng.hpp"
#include "protoverb/scoring.hpp"

namespace protoverb {

using nlohmann::json;

namespace {

std::string format_double(double x) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), x);
  return {buffer, result.ptr};
}

std::size_t resolve_n_way(const EmbeddingDataset& dataset, const ExperimentSettings& settings) {
  return settings.n_way == 0 ? dataset.num_classes() : settings.n_way;
}

json optional_list(const std::vector<std::optional<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v ? json(*v) : json(nullptr));
  return out;
}

json stats_json(const SummaryStats& s) { return {{"mean", s.mean}, {"std", s.std_dev}, {"n", s.count}}; }

}  // namespace

void ExperimentGrid::validate() const {
  if (k_values.empty() || seeds.empty() || noise_levels.empty() || loss_variants.empty()) {
    throw ConfigError("experiment grid: k values, seeds, noise levels and variants must be non-empty");
  }
  for (std::size_t k : k_values) {
    if (k < 1) throw ConfigError("experiment grid: k values must be positive");
  }
  auto unique = [](const auto& values) { return std::set(values.begin(), values.end()).size() == values.size(); };
  if (!unique(k_values) || !unique(seeds) || !unique(noise_levels) || !unique(loss_variants) || !unique(templates)) {
    throw ConfigError("experiment grid: duplicate entries");
  }
}

std::vector<CellSpec> enumerate_cells(const ExperimentGrid& grid, const std::string& default_template) {
  grid.validate();
  std::vector<std::string> templates = grid.templates;
  if (templates.empty()) templates.push_back(default_template);
  std::vector<CellSpec> cells;
  for (const auto& t : templates) {
    for (std::size_t k : grid.k_values) {
      for (std::uint64_t seed : grid.seeds) {
        for (LossVariant v : grid.loss_variants) {
          for (std::size_t m : grid.noise_levels) cells.push_back({t, k, seed, v, m});
        }
      }
    }
  }
  std::sort(cells.begin(), cells.end());
  return cells;
}

CellOutcome run_cell(const EmbeddingDataset& dataset, const CellSpec& cell, const ExperimentSettings& settings) {
  const std::size_t n_way = resolve_n_way(dataset, settings);
  Episode episode = sample_episode(dataset, n_way, cell.k_shot, cell.seed);
  if (cell.noise > 0) episode = inject_noise(episode, cell.noise, derive_seed(cell.seed, kNoiseStream));

  TrainConfig config = settings.train;
  config.seed = cell.seed;
  config.loss_variant = cell.variant;
  const TrainResult trained = train(dataset, episode, config);

  std::vector<NamedScorer> scorers{make_proto_scorer(trained.encoder, trained.prototypes)};
  if (settings.use_manual) scorers.push_back(make_manual_scorer(n_way));
  const EvalResult eval = evaluate(dataset, scorers, n_way);
  return {cell, eval.accuracy, eval.per_class, eval.n_test};
}

std::vector<CellOutcome> run_cells(const EmbeddingDataset& dataset, std::span<const CellSpec> cells,
                                   const ExperimentSettings& settings) {
  std::vector<CellOutcome> out(cells.size());
  parallel_for(cells.size(), settings.jobs, [&](std::size_t i) { out[i] = run_cell(dataset, cells[i], settings); });
  return out;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

AblationTable summarize_ablation(std::vector<CellOutcome> cells, const ExperimentGrid& grid) {
  AblationTable table;
  table.cells = std::move(cells);
  std::vector<std::size_t> ks = grid.k_values;
  std::sort(ks.begin(), ks.end());
  for (std::size_t k : ks) {
    for (LossVariant v : grid.loss_variants) {
      AblationRow row{k, v, {}, {}};
      for (std::uint64_t seed : grid.seeds) {
        for (const auto& c : table.cells) {
          if (c.spec.k_shot == k && c.spec.variant == v && c.spec.seed == seed && c.spec.noise == 0) {
            row.per_seed.push_back(c.accuracy);
          }
        }
      }
      row.accuracy = summarize(row.per_seed);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

AblationTable run_ablation(const EmbeddingDataset& dataset, const ExperimentGrid& grid,
                           const ExperimentSettings& settings) {
  ExperimentGrid clean = grid;
  clean.noise_levels = {0};
  clean.templates.clear();
  const auto cells = enumerate_cells(clean, dataset.header.template_id);
  return summarize_ablation(run_cells(dataset, cells, settings), clean);
}

NoiseTable summarize_noise(std::vector<CellOutcome> cells, const ExperimentGrid& grid, LossVariant variant) {
  NoiseTable table;
  table.variant = variant;
  table.cells = std::move(cells);
  std::vector<std::size_t> levels = grid.noise_levels;
  if (std::find(levels.begin(), levels.end(), 0) == levels.end()) levels.push_back(0);
  std::sort(levels.begin(), levels.end());

  auto accuracy_of = [&](std::size_t k, std::uint64_t seed, std::size_t m) {
    for (const auto& c : table.cells) {
      if (c.spec.k_shot == k && c.spec.seed == seed && c.spec.noise == m && c.spec.variant == variant) return c.accuracy;
    }
    throw ConfigError("noise summary: missing cell k=" + std::to_string(k) + " seed=" + std::to_string(seed) +
                      " m=" + std::to_string(m));
  };
  std::vector<std::size_t> ks = grid.k_values;
  std::sort(ks.begin(), ks.end());
  for (std::size_t k : ks) {
    for (std::size_t m : levels) {
      NoiseRow row{k, m, {}, {}};
      for (std::uint64_t seed : grid.seeds) row.per_seed_drop.push_back(accuracy_of(k, seed, 0) - accuracy_of(k, seed, m));
      row.drop = summarize(row.per_seed_drop);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

NoiseTable run_noise_sweep(const EmbeddingDataset& dataset, const ExperimentGrid& grid,
                           const ExperimentSettings& settings) {
  const std::size_t n_way = resolve_n_way(dataset, settings);
  ExperimentGrid sweep = grid;
  sweep.loss_variants = {settings.train.loss_variant};
  sweep.templates.clear();
  if (std::find(sweep.noise_levels.begin(), sweep.noise_levels.end(), 0) == sweep.noise_levels.end()) {
    sweep.noise_levels.push_back(0);
  }
  for (std::size_t k : sweep.k_values) {
    for (std::size_t m : sweep.noise_levels) {
      if (m > 0 && m >= k * n_way) {
        throw ConfigError("noise level " + std::to_string(m) + " must be below k*N = " + std::to_string(k * n_way));
      }
    }
  }
  const auto cells = enumerate_cells(sweep, dataset.header.template_id);
  return summarize_noise(run_cells(dataset, cells, settings), sweep, settings.train.loss_variant);
}

ProbeReport probe_vocabulary(const ProjectionEncoder& encoder, const PrototypeSet& prototypes,
                             std::span<const EmbeddingRecord> probes, std::size_t top_k,
                             std::vector<std::string> class_names) {
  if (probes.empty()) throw DataError("probe set is empty");
  validate_prototypes(prototypes);
  if (class_names.empty()) {
    for (std::size_t n = 0; n < prototypes.size(); ++n) class_names.push_back("class_" + std::to_string(n));
  }
  if (class_names.size() != prototypes.size()) throw ConfigError("probe: class name count differs from prototypes");

  std::vector<std::string> tokens;
  Matrix projected(static_cast<Eigen::Index>(probes.size()), static_cast<Eigen::Index>(prototypes.dim()));
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (probes[i].embedding.size() != encoder.input_dim()) {
      throw DataError("probe '" + probes[i].id + "' has dim " + std::to_string(probes[i].embedding.size()) +
                        ", checkpoint expects " + std::to_string(encoder.input_dim()));
    }
    tokens.push_back(probes[i].token.value_or(probes[i].id));
    projected.row(static_cast<Eigen::Index>(i)) = project(encoder, probes[i].embedding).transpose();
  }

  ProbeReport report;
  report.top_k = top_k;
  report.class_names = std::move(class_names);
  for (std::size_t n = 0; n < prototypes.size(); ++n) {
    const Vector c = prototypes.prototype(n);
    std::vector<ProbeEntry> ranked;
    ranked.reserve(probes.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
      ranked.push_back({tokens[i], cosine_similarity(projected.row(static_cast<Eigen::Index>(i)).transpose(), c)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const ProbeEntry& a, const ProbeEntry& b) {
      return a.score != b.score ? a.score > b.score : a.token < b.token;
    });
    if (ranked.size() > top_k) ranked.resize(top_k);
    report.per_class.push_back(std::move(ranked));
  }
  return report;
}

Matrix proto_manual_similarity(const ProjectionEncoder& encoder, const PrototypeSet& prototypes,
                               const std::vector<std::vector<std::vector<double>>>& word_embeddings) {
  validate_prototypes(prototypes);
  const auto n = static_cast<Eigen::Index>(prototypes.size());
  if (static_cast<Eigen::Index>(word_embeddings.size()) != n) {
    throw DataError("label words given for " + std::to_string(word_embeddings.size()) + " classes, expected " +
                    std::to_string(n));
  }
  std::vector<Vector> word_means;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& words = word_embeddings[static_cast<std::size_t>(j)];
    if (words.empty()) throw DataError("class " + std::to_string(j) + " has no label words");
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(prototypes.dim()));
    for (const auto& w : words) sum += project(encoder, w);
    word_means.push_back(sum / static_cast<double>(words.size()));
  }
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector c = prototypes.prototype(static_cast<std::size_t>(i));
    Eigen::RowVectorXd sims(n);
    for (Eigen::Index j = 0; j < n; ++j) sims(j) = cosine_similarity(c, word_means[static_cast<std::size_t>(j)]);
    const double lse = log_sum_exp(sims);
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = std::exp(sims(j) - lse);
  }
  return out;
}

Matrix average_matrices(std::span<const Matrix> matrices) {
  if (matrices.empty()) throw ConfigError("average_matrices: nothing to average");
  Matrix sum = Matrix::Zero(matrices.front().rows(), matrices.front().cols());
  for (const auto& m : matrices) {
    if (m.rows() != sum.rows() || m.cols() != sum.cols()) throw ConfigError("average_matrices: shape mismatch");
    sum += m;
  }
  return sum / static_cast<double>(matrices.size());
}

json cell_to_json(const CellOutcome& cell) {
  return {{"template_id", cell.spec.template_id},
          {"k", cell.spec.k_shot},
          {"seed", cell.spec.seed},
          {"variant", to_string(cell.spec.variant)},
          {"m", cell.spec.noise},
          {"accuracy", cell.accuracy},
          {"per_class", optional_list(cell.per_class)},
          {"n_test", cell.n_test}};
}

json ablation_to_json(const AblationTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"k", r.k_shot}, {"variant", to_string(r.variant)}, {"accuracy", stats_json(r.accuracy)}, {"per_seed", r.per_seed}});
  }
  return {{"rows", rows}};
}

json noise_to_json(const NoiseTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"k", r.k_shot}, {"m", r.noise}, {"drop", stats_json(r.drop)}, {"per_seed_drop", r.per_seed_drop}});
  }
  return {{"variant", to_string(table.variant)}, {"rows", rows}};
}

json probe_entry_json(const ProbeReport& report, std::size_t n) {
  json ranked = json::array();
  for (std::size_t r = 0; r < report.per_class[n].size(); ++r) {
    ranked.push_back({{"rank", r + 1}, {"token", report.per_class[n][r].token}, {"score", report.per_class[n][r].score}});
  }
  return {{"class", report.class_names[n]}, {"class_index", n}, {"top_k", report.top_k}, {"tokens", ranked}};
}

std::string probe_to_ndjson(const ProbeReport& report) {
  std::string out;
  for (std::size_t n = 0; n < report.per_class.size(); ++n) out += probe_entry_json(report, n).dump() + '\n';
  return out;
}

std::string cells_to_long_csv(std::span<const CellOutcome> cells) {
  std::string out = "template_id,k,seed,variant,m,accuracy\n";
  for (const auto& c : cells) {
    out += c.spec.template_id + ',' + std::to_string(c.spec.k_shot) + ',' + std::to_string(c.spec.seed) + ',' +
           std::string(to_string(c.spec.variant)) + ',' + std::to_string(c.spec.noise) + ',' + format_double(c.accuracy) +
           '\n';
  }
  return out;
}

std::string ablation_to_csv(const AblationTable& table) {
  std::string out = "k,variant,mean_accuracy,std_accuracy,n_seeds\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.k_shot) + ',' + std::string(to_string(r.variant)) + ',' + format_double(r.accuracy.mean) +
           ',' + format_double(r.accuracy.std_dev) + ',' + std::to_string(r.accuracy.count) + '\n';
  }
  return out;
}

std::string noise_to_csv(const NoiseTable& table) {
  std::string out = "k,m,mean_drop,std_drop,n_seeds\n";
  for (const auto& r : table.rows) {
    out += std::to_string(r.k_shot) + ',' + std::to_string(r.noise) + ',' + format_double(r.drop.mean) + ',' +
           format_double(r.drop.std_dev) + ',' + std::to_string(r.drop.count) + '\n';
  }
  return out;
}

}  // namespace protoverb
