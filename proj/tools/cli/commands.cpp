#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "protoverb/analysis.hpp"
#include "protoverb/checkpoint.hpp"
#include "protoverb/embedding_store.hpp"
#include "protoverb/episode.hpp"
#include "protoverb/errors.hpp"
#include "protoverb/rng.hpp"
#include "protoverb/scoring.hpp"
#include "protoverb/synthetic.hpp"
#include "protoverb/trainer.hpp"

namespace protoverb::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    write_text_file(path, content);
  }
}

std::string pretty(const json& j) { return j.dump(2) + '\n'; }

EmbeddingDataset load_input_dataset(const std::string& path, RunManifest& manifest) {
  auto dataset = load_dataset(path);
  manifest.add_input(path);
  return dataset;
}

Checkpoint load_input_checkpoint(const std::string& path, RunManifest& manifest) {
  auto checkpoint = load_checkpoint(path);
  manifest.add_input(path);
  return checkpoint;
}

LossVariant require_variant(const std::string& text) {
  const auto v = parse_loss_variant(text);
  if (!v) throw ConfigError("unknown variant '" + text + "' (expected full, proto_only or instance_mean)");
  return *v;
}

std::size_t resolve_n_way(std::size_t requested, const EmbeddingDataset& dataset) {
  return requested == 0 ? dataset.num_classes() : requested;
}

std::uint64_t resolve_noise_seed(const std::optional<std::uint64_t>& noise_seed, std::uint64_t seed) {
  return noise_seed.value_or(derive_seed(seed, kNoiseStream));
}

void check_template(const std::string& expected, const EmbeddingDataset& dataset) {
  if (!expected.empty() && expected != dataset.header.template_id) {
    throw DataError("dataset template '" + dataset.header.template_id + "' does not match --template '" + expected + "'");
  }
}

void check_checkpoint_matches(const Checkpoint& cp, const EmbeddingDataset& dataset) {
  if (cp.meta.dim != dataset.dim()) {
    throw DataError("checkpoint expects dim " + std::to_string(cp.meta.dim) + ", dataset has dim " +
                    std::to_string(dataset.dim()));
  }
  const auto& names = dataset.header.class_names;
  if (cp.meta.class_names.size() > names.size() ||
      !std::equal(cp.meta.class_names.begin(), cp.meta.class_names.end(), names.begin())) {
    throw DataError("checkpoint classes do not match the dataset's class names");
  }
}

std::vector<EmbeddingRecord> probe_records(const EmbeddingDataset& vocab, std::size_t expected_dim) {
  if (vocab.dim() != expected_dim) {
    throw DataError("vocab file has dim " + std::to_string(vocab.dim()) + ", checkpoint expects " +
                    std::to_string(expected_dim));
  }
  std::vector<EmbeddingRecord> probes;
  for (const auto& r : vocab.records) {
    if (r.split == Split::kVocabProbe) probes.push_back(r);
  }
  if (probes.empty()) throw DataError("vocab file holds no vocab_probe records");
  return probes;
}

std::string safe_name(const std::string& text) {
  std::string out;
  for (char c : text) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out.empty() ? "_" : out;
}

json optional_list(const std::vector<std::optional<double>>& values) {
  json out = json::array();
  for (const auto& v : values) out.push_back(v ? json(*v) : json(nullptr));
  return out;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json to_json(const ValidateOptions& o) { return {{"dataset", o.dataset}}; }

json to_json(const SampleOptions& o) {
  return {{"dataset", o.dataset}, {"n_way", o.n_way}, {"k", o.k_shot}, {"seed", o.seed}, {"noise", o.noise},
          {"noise_seed", o.noise_seed ? json(*o.noise_seed) : json(nullptr)}, {"out", o.out}};
}

json to_json(const TrainOptions& o) {
  return {{"dataset", o.dataset},       {"n_way", o.n_way},
          {"k", o.k_shot},              {"seed", o.seed},
          {"variant", o.variant},       {"steps", o.steps},
          {"lr", o.learning_rate},      {"proto_dim", o.prototype_dim},
          {"init_scale", o.init_scale}, {"beta1", o.beta1},
          {"beta2", o.beta2},           {"epsilon", o.epsilon},
          {"noise", o.noise},           {"noise_seed", o.noise_seed ? json(*o.noise_seed) : json(nullptr)},
          {"template", o.template_id},  {"out", o.out}};
}

json to_json(const EvalOptions& o) {
  return {{"dataset", o.dataset}, {"checkpoint", o.checkpoint}, {"scorers", o.scorers}, {"template", o.template_id},
          {"out", o.out},         {"predictions", o.predictions}, {"jobs", o.jobs}};
}

json to_json(const GridOptions& o) {
  return {{"datasets", o.datasets},    {"k", o.k_values},       {"seeds", o.seeds},
          {"noise", o.noise_levels},   {"variants", o.variants}, {"templates", o.templates},
          {"n_way", o.n_way},          {"steps", o.steps},       {"lr", o.learning_rate},
          {"proto_dim", o.prototype_dim}, {"init_scale", o.init_scale}, {"manual", o.manual},
          {"jobs", o.jobs},            {"out_dir", o.out_dir}};
}

json to_json(const ProbeOptions& o) {
  return {{"checkpoint", o.checkpoint}, {"vocab", o.vocab}, {"top_k", o.top_k}, {"out", o.out}};
}

json to_json(const SimilarityOptions& o) {
  return {{"checkpoints", o.checkpoints}, {"vocab", o.vocab}, {"verbalizer", o.verbalizer}, {"out", o.out}};
}

json to_json(const SynthOptions& o) {
  return {{"classes", o.classes},         {"dim", o.dim},
          {"train", o.train_per_class},   {"test", o.test_per_class},
          {"separation", o.separation},   {"sigma", o.sigma},
          {"offset", o.offset},           {"nuisance_dims", o.nuisance_dims},
          {"nuisance_scale", o.nuisance_scale}, {"manual_noise", o.manual_noise},
          {"probe_words", o.probe_words}, {"fillers", o.filler_tokens},
          {"seed", o.seed},               {"template", o.template_id},
          {"model", o.model_id},          {"out", o.out}};
}

int cmd_validate(const ValidateOptions& o, RunManifest& manifest, std::ostream& out) {
  manifest.add_input(o.dataset);
  const ParseOutcome outcome = validate_dataset_file(o.dataset);
  for (const auto& d : outcome.diagnostics) out << o.dataset << ": " << format_diagnostic(d) << '\n';
  if (outcome.dataset) {
    const auto& ds = *outcome.dataset;
    out << ds.records.size() << " records (train " << ds.indices(Split::kTrain).size() << ", test "
        << ds.indices(Split::kTest).size() << ", vocab_probe " << ds.indices(Split::kVocabProbe).size() << "), dim "
        << ds.dim() << ", " << ds.num_classes() << " classes\n";
  }
  out << outcome.diagnostics.size() << " errors\n";
  manifest.set_extra("errors", outcome.diagnostics.size());
  return outcome.diagnostics.empty() ? kExitOk : kExitData;
}

int cmd_sample(const SampleOptions& o, RunManifest& manifest, std::ostream& out) {
  const auto dataset = load_input_dataset(o.dataset, manifest);
  Episode episode = sample_episode(dataset, resolve_n_way(o.n_way, dataset), o.k_shot, o.seed);
  if (o.noise > 0) episode = inject_noise(episode, o.noise, resolve_noise_seed(o.noise_seed, o.seed));
  emit(o.out, pretty(episode_to_json(episode)), out);
  return kExitOk;
}

int cmd_train(const TrainOptions& o, RunManifest& manifest, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("train: --out is required");
  const auto dataset = load_input_dataset(o.dataset, manifest);
  check_template(o.template_id, dataset);

  TrainConfig config;
  config.steps = o.steps;
  config.learning_rate = o.learning_rate;
  config.seed = o.seed;
  config.loss_variant = require_variant(o.variant);
  config.beta1 = o.beta1;
  config.beta2 = o.beta2;
  config.epsilon = o.epsilon;
  config.init_scale = o.init_scale;
  config.prototype_dim = o.prototype_dim;
  config.validate();

  Episode episode = sample_episode(dataset, resolve_n_way(o.n_way, dataset), o.k_shot, o.seed);
  if (o.noise > 0) episode = inject_noise(episode, o.noise, resolve_noise_seed(o.noise_seed, o.seed));

  Checkpoint cp;
  cp.result = train(dataset, episode, config);
  cp.meta.dim = dataset.dim();
  cp.meta.class_names.assign(dataset.header.class_names.begin(),
                             dataset.header.class_names.begin() + static_cast<std::ptrdiff_t>(episode.n_way));
  cp.meta.variant = config.loss_variant;
  cp.meta.seed = config.seed;
  cp.meta.steps = config.steps;
  cp.meta.learning_rate = config.learning_rate;
  cp.meta.template_id = dataset.header.template_id;
  cp.meta.model_id = dataset.header.model_id;
  cp.meta.n_way = episode.n_way;
  cp.meta.k_shot = episode.k_shot;
  cp.meta.episode_seed = episode.seed;
  cp.meta.noise = episode.noise;
  save_checkpoint(cp, o.out);

  out << "wrote " << o.out << " (" << cp.meta.n_way << "-way " << cp.meta.k_shot << "-shot, prototype_dim "
      << cp.result.encoder.output_dim() << ", variant " << to_string(cp.meta.variant) << ")";
  if (!cp.result.loss_trace.empty()) {
    out << ", loss " << cp.result.loss_trace.front().loss.total << " -> " << cp.result.loss_trace.back().loss.total;
  }
  out << '\n';
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, RunManifest& manifest, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("eval: --out is required");
  if (o.scorers.empty()) throw ConfigError("eval: at least one scorer required");
  const auto dataset = load_input_dataset(o.dataset, manifest);
  check_template(o.template_id, dataset);
  const auto cp = load_input_checkpoint(o.checkpoint, manifest);
  check_checkpoint_matches(cp, dataset);
  const std::size_t n_way = cp.meta.class_names.size();

  std::vector<NamedScorer> scorers;
  for (const auto& id : o.scorers) {
    if (id == kProtoScorerId) {
      scorers.push_back(make_proto_scorer(cp.result.encoder, cp.result.prototypes));
    } else if (id == kManualScorerId) {
      scorers.push_back(make_manual_scorer(n_way));
    } else {
      throw ConfigError("unknown scorer '" + id + "' (expected proto or manual)");
    }
  }
  const EvalResult result = evaluate(dataset, scorers, n_way, o.jobs);

  const json report{{"accuracy", result.accuracy},
                    {"per_class", optional_list(result.per_class)},
                    {"class_names", cp.meta.class_names},
                    {"n_test", result.n_test},
                    {"scorer_ids", result.scorer_ids},
                    {"seed", cp.meta.seed},
                    {"template_id", dataset.header.template_id}};
  write_text_file(o.out, pretty(report));
  if (!o.predictions.empty()) {
    std::string lines;
    for (const auto& p : result.predictions) {
      json scores = json::object();
      for (const auto& s : p.per_scorer) scores[s.scorer_id] = s.scores;
      lines += json{{"instance_id", p.instance_id}, {"gold", p.gold}, {"predicted", p.predicted}, {"scores", scores}}.dump();
      lines += '\n';
    }
    write_text_file(o.predictions, lines);
  }
  out << "accuracy " << result.accuracy << " on " << result.n_test << " test records\n";
  return kExitOk;
}

int cmd_grid(const GridOptions& o, RunManifest& manifest, std::ostream& out) {
  if (o.out_dir.empty()) throw ConfigError("grid: --out-dir is required");
  if (o.datasets.empty()) throw ConfigError("grid: at least one --dataset required");

  ExperimentGrid grid;
  grid.k_values = o.k_values;
  grid.seeds = o.seeds;
  grid.noise_levels = o.noise_levels;
  grid.loss_variants.clear();
  for (const auto& v : o.variants) grid.loss_variants.push_back(require_variant(v));
  grid.validate();

  ExperimentSettings settings;
  settings.n_way = o.n_way;
  settings.train.steps = o.steps;
  settings.train.learning_rate = o.learning_rate;
  settings.train.prototype_dim = o.prototype_dim;
  settings.train.init_scale = o.init_scale;
  settings.train.validate();
  settings.use_manual = o.manual;

  // template id -> (dataset, digest)
  std::map<std::string, std::pair<EmbeddingDataset, std::string>> datasets;
  for (const auto& path : o.datasets) {
    auto ds = load_dataset(path);
    manifest.add_input(path);
    const std::string id = ds.header.template_id;
    if (!o.templates.empty() && std::find(o.templates.begin(), o.templates.end(), id) == o.templates.end()) continue;
    if (datasets.count(id)) throw ConfigError("two datasets share template '" + id + "'");
    datasets.emplace(id, std::make_pair(std::move(ds), sha256_file(path)));
  }
  for (const auto& t : o.templates) {
    if (!datasets.count(t)) throw ConfigError("no dataset carries template '" + t + "'");
  }
  for (const auto& [id, entry] : datasets) {
    const std::size_t n_way = resolve_n_way(o.n_way, entry.first);
    for (std::size_t k : grid.k_values) {
      for (std::size_t m : grid.noise_levels) {
        if (m > 0 && m >= k * n_way) {
          throw ConfigError("noise level " + std::to_string(m) + " must be below k*N = " + std::to_string(k * n_way));
        }
      }
    }
  }

  // Settings that change a cell's result; echoed in every cell digest.
  const json cell_settings{{"n_way", o.n_way},
                           {"steps", o.steps},
                           {"lr", o.learning_rate},
                           {"proto_dim", o.prototype_dim},
                           {"init_scale", o.init_scale},
                           {"manual", o.manual},
                           {"tool_version", tool_version()}};

  struct Pending {
    CellSpec spec;
    fs::path file;
    std::string digest;
  };
  std::vector<CellOutcome> all_cells;
  std::vector<Pending> pending;
  std::vector<std::size_t> pending_slot;
  std::size_t reused = 0;
  for (const auto& [id, entry] : datasets) {
    ExperimentGrid one = grid;
    one.templates = {id};
    for (const auto& spec : enumerate_cells(one, id)) {
      const json key{{"dataset_sha256", entry.second},
                     {"template_id", spec.template_id},
                     {"k", spec.k_shot},
                     {"seed", spec.seed},
                     {"variant", to_string(spec.variant)},
                     {"m", spec.noise},
                     {"settings", cell_settings}};
      const std::string digest = sha256_hex(key.dump());
      const fs::path file = fs::path(o.out_dir) / "cells" / safe_name(id) /
                            ("k" + std::to_string(spec.k_shot) + "-seed" + std::to_string(spec.seed) + "-" +
                             std::string(to_string(spec.variant)) + "-m" + std::to_string(spec.noise) + ".json");
      all_cells.push_back({spec, 0.0, {}, 0});
      if (fs::exists(file)) {
        const json stored = json::parse(read_text_file(file), nullptr, false);
        if (!stored.is_discarded() && stored.value("cell_digest", "") == digest) {
          auto& cell = all_cells.back();
          cell.accuracy = stored.at("accuracy").get<double>();
          cell.n_test = stored.at("n_test").get<std::size_t>();
          for (const auto& v : stored.at("per_class")) {
            cell.per_class.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
          }
          ++reused;
          continue;
        }
      }
      pending.push_back({spec, file, digest});
      pending_slot.push_back(all_cells.size() - 1);
    }
  }

  // Run pending cells, grouped by template so each uses its own dataset.
  ExperimentSettings run_settings = settings;
  run_settings.jobs = o.jobs;
  for (const auto& [id, entry] : datasets) {
    std::vector<CellSpec> specs;
    std::vector<std::size_t> which;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].spec.template_id == id) {
        specs.push_back(pending[i].spec);
        which.push_back(i);
      }
    }
    if (specs.empty()) continue;
    const auto outcomes = run_cells(entry.first, specs, run_settings);
    for (std::size_t j = 0; j < outcomes.size(); ++j) {
      const auto& p = pending[which[j]];
      json stored = cell_to_json(outcomes[j]);
      stored["cell_digest"] = p.digest;
      write_text_file(p.file, pretty(stored));
      all_cells[pending_slot[which[j]]] = outcomes[j];
    }
  }

  // Aggregates.
  json summary = json::array();
  std::string aggregate_csv = "template_id,k,variant,m,mean_accuracy,std_accuracy,n_seeds\n";
  json ablation = json::object();
  json noise = json::object();
  for (const auto& [id, entry] : datasets) {
    std::vector<CellOutcome> cells;
    for (const auto& c : all_cells) {
      if (c.spec.template_id == id) cells.push_back(c);
    }
    for (std::size_t k : std::set<std::size_t>(grid.k_values.begin(), grid.k_values.end())) {
      for (LossVariant v : grid.loss_variants) {
        for (std::size_t m : std::set<std::size_t>(grid.noise_levels.begin(), grid.noise_levels.end())) {
          std::vector<double> accs;
          for (std::uint64_t seed : grid.seeds) {
            for (const auto& c : cells) {
              if (c.spec.k_shot == k && c.spec.variant == v && c.spec.noise == m && c.spec.seed == seed) accs.push_back(c.accuracy);
            }
          }
          const auto stats = summarize(accs);
          summary.push_back({{"template_id", id}, {"k", k}, {"variant", to_string(v)}, {"m", m},
                             {"mean_accuracy", stats.mean}, {"std_accuracy", stats.std_dev}, {"n_seeds", stats.count}});
          aggregate_csv += id + ',' + std::to_string(k) + ',' + std::string(to_string(v)) + ',' + std::to_string(m) + ',' +
                           json(stats.mean).dump() + ',' + json(stats.std_dev).dump() + ',' + std::to_string(stats.count) + '\n';
        }
      }
    }
    const bool has_clean = std::find(grid.noise_levels.begin(), grid.noise_levels.end(), 0) != grid.noise_levels.end();
    if (has_clean) {
      ablation[id] = ablation_to_json(summarize_ablation(cells, grid));
      if (grid.noise_levels.size() > 1) {
        json per_variant = json::object();
        for (LossVariant v : grid.loss_variants) {
          per_variant[std::string(to_string(v))] = noise_to_json(summarize_noise(cells, grid, v));
        }
        noise[id] = per_variant;
      }
    }
  }

  json digests = json::object();
  for (const auto& [id, entry] : datasets) digests[id] = entry.second;
  json grid_config = to_json(o);
  grid_config.erase("jobs");
  grid_config.erase("out_dir");
  grid_config.erase("datasets");
  const json aggregate{{"grid", grid_config},
                       {"dataset_sha256", digests},
                       {"summary", summary},
                       {"ablation", ablation},
                       {"noise", noise}};
  write_text_file(fs::path(o.out_dir) / "aggregate.json", pretty(aggregate));
  write_text_file(fs::path(o.out_dir) / "aggregate.csv", aggregate_csv);
  write_text_file(fs::path(o.out_dir) / "long.csv", cells_to_long_csv(all_cells));

  manifest.set_extra("cells_total", all_cells.size());
  manifest.set_extra("cells_computed", pending.size());
  manifest.set_extra("cells_reused", reused);
  out << "cells: " << all_cells.size() << " total, " << pending.size() << " computed, " << reused << " reused\n";
  return kExitOk;
}

int cmd_probe(const ProbeOptions& o, RunManifest& manifest, std::ostream& out) {
  const auto cp = load_input_checkpoint(o.checkpoint, manifest);
  const auto vocab = load_input_dataset(o.vocab, manifest);
  const auto probes = probe_records(vocab, cp.meta.dim);
  const auto report = probe_vocabulary(cp.result.encoder, cp.result.prototypes, probes, o.top_k, cp.meta.class_names);
  emit(o.out, probe_to_ndjson(report), out);
  return kExitOk;
}

int cmd_similarity(const SimilarityOptions& o, RunManifest& manifest, std::ostream& out) {
  if (o.checkpoints.empty()) throw ConfigError("similarity: at least one --checkpoint required");
  std::vector<Checkpoint> checkpoints;
  for (const auto& path : o.checkpoints) checkpoints.push_back(load_input_checkpoint(path, manifest));
  const auto& names = checkpoints.front().meta.class_names;
  for (const auto& cp : checkpoints) {
    if (cp.meta.class_names != names || cp.meta.dim != checkpoints.front().meta.dim) {
      throw DataError("similarity: checkpoints disagree on classes or dimension");
    }
  }
  const auto vocab = load_input_dataset(o.vocab, manifest);
  const auto probes = probe_records(vocab, checkpoints.front().meta.dim);
  std::map<std::string, const EmbeddingRecord*> by_token;
  for (const auto& r : probes) by_token[r.token.value_or(r.id)] = &r;

  std::vector<std::vector<std::string>> words(names.size());
  if (o.verbalizer.empty()) {
    for (std::size_t n = 0; n < names.size(); ++n) words[n] = {names[n]};
  } else {
    manifest.add_input(o.verbalizer);
    const json verbalizer = json::parse(read_text_file(o.verbalizer), nullptr, false);
    if (verbalizer.is_discarded() || !verbalizer.is_object()) throw DataError("verbalizer must be a JSON object");
    for (std::size_t n = 0; n < names.size(); ++n) {
      const auto it = verbalizer.find(names[n]);
      if (it == verbalizer.end() || !it->is_array()) throw DataError("verbalizer has no words for class '" + names[n] + "'");
      for (const auto& w : *it) words[n].push_back(w.get<std::string>());
    }
  }
  std::vector<std::vector<std::vector<double>>> embeddings(names.size());
  for (std::size_t n = 0; n < names.size(); ++n) {
    for (const auto& w : words[n]) {
      const auto it = by_token.find(w);
      if (it == by_token.end()) throw DataError("label word '" + w + "' not found among vocab_probe tokens");
      embeddings[n].push_back(it->second->embedding);
    }
  }

  std::vector<Matrix> per_checkpoint;
  json per_checkpoint_json = json::array();
  for (const auto& cp : checkpoints) {
    per_checkpoint.push_back(proto_manual_similarity(cp.result.encoder, cp.result.prototypes, embeddings));
    per_checkpoint_json.push_back({{"seed", cp.meta.seed}, {"k", cp.meta.k_shot}, {"matrix", matrix_json(per_checkpoint.back())}});
  }
  const json report{{"class_names", names},
                    {"label_words", words},
                    {"matrix", matrix_json(average_matrices(per_checkpoint))},
                    {"per_checkpoint", per_checkpoint_json}};
  emit(o.out, pretty(report), out);
  return kExitOk;
}

int cmd_synth(const SynthOptions& o, RunManifest&, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("synth: --out is required");
  SyntheticSpec spec;
  spec.num_classes = o.classes;
  spec.dim = o.dim;
  spec.train_per_class = o.train_per_class;
  spec.test_per_class = o.test_per_class;
  spec.separation = o.separation;
  spec.sigma = o.sigma;
  spec.offset = o.offset;
  spec.nuisance_dims = o.nuisance_dims;
  spec.nuisance_scale = o.nuisance_scale;
  spec.manual_noise = o.manual_noise;
  spec.probe_words_per_class = o.probe_words;
  spec.filler_tokens = o.filler_tokens;
  spec.seed = o.seed;
  spec.template_id = o.template_id;
  spec.model_id = o.model_id;
  const auto dataset = make_synthetic_dataset(spec);
  write_dataset(dataset, o.out);
  out << "wrote " << o.out << " (" << dataset.records.size() << " records, dim " << dataset.dim() << ")\n";
  return kExitOk;
}

}  // namespace protoverb::cli
