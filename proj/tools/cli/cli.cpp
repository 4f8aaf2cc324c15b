#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <optional>

#include "commands.hpp"
#include "manifest.hpp"
#include "protoverb/embedding_store.hpp"
#include "protoverb/errors.hpp"

namespace protoverb::cli {

namespace {

struct Invocation {
  std::string command;
  nlohmann::json config;
  std::filesystem::path manifest_path;  // empty: manifest goes to stderr
  std::function<int(RunManifest&, std::ostream&)> body;
};

std::filesystem::path beside(const std::string& out) {
  return out.empty() ? std::filesystem::path{} : std::filesystem::path(out + ".manifest.json");
}

void add_training_flags(CLI::App* cmd, std::size_t& steps, double& lr, std::size_t& proto_dim, double& init_scale) {
  cmd->add_option("--steps", steps, "Adam steps")->capture_default_str();
  cmd->add_option("--lr", lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--proto-dim", proto_dim, "prototype space dimension")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--init-scale", init_scale, "W init range is +-scale/sqrt(D)")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"protoverb: prototypical verbalizers over frozen [MASK] embeddings", "protoverb"};
  app.set_version_flag("--version", tool_version());
  app.set_config("--config", "", "TOML or INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  ValidateOptions validate;
  SampleOptions sample;
  TrainOptions train;
  EvalOptions eval;
  GridOptions grid;
  ProbeOptions probe;
  SimilarityOptions similarity;
  SynthOptions synth;
  std::uint64_t sample_noise_seed = 0;
  std::uint64_t train_noise_seed = 0;

  auto* c_validate = app.add_subcommand("validate", "check a dataset file and list every violation");
  c_validate->add_option("dataset", validate.dataset, "NDJSON dataset (.gz accepted)")->required();

  auto* c_sample = app.add_subcommand("sample", "draw an N-way K-shot support set");
  c_sample->add_option("--dataset", sample.dataset)->required();
  c_sample->add_option("--n-way", sample.n_way, "0 uses every class")->capture_default_str();
  c_sample->add_option("--k", sample.k_shot)->capture_default_str();
  c_sample->add_option("--seed", sample.seed)->capture_default_str();
  c_sample->add_option("--noise", sample.noise, "number of corrupted support labels")->capture_default_str();
  auto* sample_ns = c_sample->add_option("--noise-seed", sample_noise_seed);
  c_sample->add_option("--out", sample.out, "default: stdout");

  auto* c_train = app.add_subcommand("train", "learn W and the prototypes on one episode");
  c_train->add_option("--dataset", train.dataset)->required();
  c_train->add_option("--n-way", train.n_way, "0 uses every class")->capture_default_str();
  c_train->add_option("--k", train.k_shot)->capture_default_str();
  c_train->add_option("--seed", train.seed, "episode and init seed")->capture_default_str();
  c_train->add_option("--variant", train.variant, "full, proto_only or instance_mean")->capture_default_str();
  add_training_flags(c_train, train.steps, train.learning_rate, train.prototype_dim, train.init_scale);
  c_train->add_option("--beta1", train.beta1)->capture_default_str();
  c_train->add_option("--beta2", train.beta2)->capture_default_str();
  c_train->add_option("--epsilon", train.epsilon)->capture_default_str();
  c_train->add_option("--noise", train.noise)->capture_default_str();
  auto* train_ns = c_train->add_option("--noise-seed", train_noise_seed);
  c_train->add_option("--template", train.template_id, "require this template id in the dataset header");
  c_train->add_option("--out", train.out, "checkpoint path")->required();

  auto* c_eval = app.add_subcommand("eval", "score the test split");
  c_eval->add_option("--dataset", eval.dataset)->required();
  c_eval->add_option("--checkpoint", eval.checkpoint)->required();
  c_eval->add_option("--scorers", eval.scorers, "proto and/or manual; several are ensembled")
      ->delimiter(',')
      ->capture_default_str();
  c_eval->add_option("--template", eval.template_id);
  c_eval->add_option("--out", eval.out, "JSON report")->required();
  c_eval->add_option("--predictions", eval.predictions, "per-instance NDJSON");
  c_eval->add_option("--jobs", eval.jobs)->capture_default_str()->check(CLI::PositiveNumber);

  auto* c_grid = app.add_subcommand("grid", "run a k x seed x variant x noise grid, resumably");
  c_grid->add_option("--dataset", grid.datasets, "one file per template")->required();
  c_grid->add_option("--k", grid.k_values)->delimiter(',')->capture_default_str();
  c_grid->add_option("--seed", grid.seeds)->delimiter(',')->capture_default_str();
  c_grid->add_option("--noise", grid.noise_levels)->delimiter(',')->capture_default_str();
  c_grid->add_option("--variant", grid.variants)->delimiter(',')->capture_default_str();
  c_grid->add_option("--template", grid.templates, "restrict to these template ids")->delimiter(',');
  c_grid->add_option("--n-way", grid.n_way)->capture_default_str();
  add_training_flags(c_grid, grid.steps, grid.learning_rate, grid.prototype_dim, grid.init_scale);
  c_grid->add_flag("--manual", grid.manual, "ensemble with the manual verbalizer");
  c_grid->add_option("--jobs", grid.jobs)->capture_default_str()->check(CLI::PositiveNumber);
  c_grid->add_option("--out-dir", grid.out_dir)->required();

  auto* c_probe = app.add_subcommand("probe", "rank vocabulary tokens by similarity to each prototype");
  c_probe->add_option("--checkpoint", probe.checkpoint)->required();
  c_probe->add_option("--vocab", probe.vocab, "dataset holding vocab_probe records")->required();
  c_probe->add_option("--top-k", probe.top_k)->capture_default_str()->check(CLI::PositiveNumber);
  c_probe->add_option("--out", probe.out, "default: stdout");

  auto* c_similarity = app.add_subcommand("similarity", "prototype vs label-word similarity, averaged over checkpoints");
  c_similarity->add_option("--checkpoint", similarity.checkpoints)->required();
  c_similarity->add_option("--vocab", similarity.vocab)->required();
  c_similarity->add_option("--verbalizer", similarity.verbalizer, "JSON object class -> [words]");
  c_similarity->add_option("--out", similarity.out, "default: stdout");

  auto* c_synth = app.add_subcommand("synth", "write a Gaussian-cluster dataset");
  c_synth->add_option("--classes", synth.classes)->capture_default_str();
  c_synth->add_option("--dim", synth.dim)->capture_default_str();
  c_synth->add_option("--train", synth.train_per_class, "train records per class")->capture_default_str();
  c_synth->add_option("--test", synth.test_per_class, "test records per class")->capture_default_str();
  c_synth->add_option("--separation", synth.separation)->capture_default_str();
  c_synth->add_option("--sigma", synth.sigma)->capture_default_str();
  c_synth->add_option("--offset", synth.offset)->capture_default_str();
  c_synth->add_option("--nuisance-dims", synth.nuisance_dims)->capture_default_str();
  c_synth->add_option("--nuisance-scale", synth.nuisance_scale)->capture_default_str();
  c_synth->add_option("--manual-noise", synth.manual_noise, "negative: no label-word log-probs")->capture_default_str();
  c_synth->add_option("--probe-words", synth.probe_words, "extra probe tokens per class")->capture_default_str();
  c_synth->add_option("--fillers", synth.filler_tokens)->capture_default_str();
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--template", synth.template_id)->capture_default_str();
  c_synth->add_option("--model", synth.model_id)->capture_default_str();
  c_synth->add_option("--out", synth.out)->required();

  std::vector<const char*> argv{"protoverb"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (sample_ns->count() > 0) sample.noise_seed = sample_noise_seed;
  if (train_ns->count() > 0) train.noise_seed = train_noise_seed;

  Invocation inv;
  if (c_validate->parsed()) {
    inv = {"validate", to_json(validate), {}, [&](RunManifest& m, std::ostream& o) { return cmd_validate(validate, m, o); }};
  } else if (c_sample->parsed()) {
    inv = {"sample", to_json(sample), beside(sample.out), [&](RunManifest& m, std::ostream& o) { return cmd_sample(sample, m, o); }};
  } else if (c_train->parsed()) {
    inv = {"train", to_json(train), beside(train.out), [&](RunManifest& m, std::ostream& o) { return cmd_train(train, m, o); }};
  } else if (c_eval->parsed()) {
    inv = {"eval", to_json(eval), beside(eval.out), [&](RunManifest& m, std::ostream& o) { return cmd_eval(eval, m, o); }};
  } else if (c_grid->parsed()) {
    inv = {"grid", to_json(grid), std::filesystem::path(grid.out_dir) / "manifest.json",
           [&](RunManifest& m, std::ostream& o) { return cmd_grid(grid, m, o); }};
  } else if (c_probe->parsed()) {
    inv = {"probe", to_json(probe), beside(probe.out), [&](RunManifest& m, std::ostream& o) { return cmd_probe(probe, m, o); }};
  } else if (c_similarity->parsed()) {
    inv = {"similarity", to_json(similarity), beside(similarity.out),
           [&](RunManifest& m, std::ostream& o) { return cmd_similarity(similarity, m, o); }};
  } else {
    inv = {"synth", to_json(synth), beside(synth.out), [&](RunManifest& m, std::ostream& o) { return cmd_synth(synth, m, o); }};
  }

  RunManifest manifest(inv.command);
  int code = kExitOk;
  try {
    if (const auto* config_opt = app.get_config_ptr(); config_opt != nullptr && config_opt->count() > 0) {
      const auto path = config_opt->as<std::string>();
      inv.config["config_file"] = path;
      manifest.add_input(path);
    }
    manifest.set_config(inv.config);
    code = inv.body(manifest, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    code = kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    code = kExitData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    code = kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    code = kExitData;
  }

  const std::string record = manifest.to_json(code).dump(2) + '\n';
  try {
    if (inv.manifest_path.empty() || code != kExitOk) {
      err << "manifest: " << manifest.to_json(code).dump() << '\n';
    } else {
      write_text_file(inv.manifest_path, record);
    }
  } catch (const Error& e) {
    err << "io error: " << e.what() << '\n';
    if (code == kExitOk) code = kExitData;
  }
  return code;
}

}  // namespace protoverb::cli
