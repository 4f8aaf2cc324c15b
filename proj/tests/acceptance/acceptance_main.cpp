// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "protoverb/analysis.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/scoring.hpp"
#include "protoverb/synthetic.hpp"
#include "test_util.hpp"

namespace {

using namespace protoverb;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

int cli_run(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out != nullptr) *out = o.str();
  return code;
}

Verdict gradient_suite() {
  Verdict v;
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto r = testing::check_random_gradients(seed);
    worst = std::max({worst, r.weight_rel_error, r.prototype_rel_error});
  }
  const double t = seconds_since(start);
  v.require(worst <= 1e-4, "max relative error " + std::to_string(worst));
  v.require(t < 30.0, "runtime " + fmt(t, 1) + " s");
  v.detail = v.pass ? "100 instances, max rel error " + std::to_string(worst) + ", " + fmt(t, 2) + " s" : v.detail;
  return v;
}

Verdict loss_oracle() {
  Verdict v;
  std::mt19937_64 gen(4242);
  std::uniform_int_distribution<std::size_t> nd(1, 5), kd(1, 4), dd(1, 16);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto c = testing::random_case(gen, nd(gen), kd(gen), dd(gen));
    const auto l = total_loss(testing::to_eigen(c.groups), testing::to_prototypes(c.prototypes));
    worst = std::max(worst, std::abs(l.instance - testing::naive_instance_loss(c.groups)));
    worst = std::max(worst, std::abs(l.prototype - testing::naive_proto_loss(c.groups, c.prototypes)));
  }
  v.require(worst <= 1e-9, "oracle gap " + std::to_string(worst));

  using testing::unit;
  const testing::Groups ins{{unit(3, 0), unit(3, 0)}, {unit(3, 0, -1), unit(3, 0, -1)}};
  const double l_ins = instance_instance_loss(testing::to_eigen(ins));
  // Every anchor sees one positive at cosine 1 and two negatives at -1.
  const double l_ins_expected = std::log(1.0 + 2.0 * std::exp(-2.0));
  v.require(std::abs(l_ins - l_ins_expected) <= 1e-5 && std::abs(l_ins - testing::naive_instance_loss(ins)) <= 1e-12,
            "L_ins worked value " + std::to_string(l_ins));
  const testing::Groups one{{unit(2, 0)}, {}};
  const double opposite = instance_prototype_loss(testing::to_eigen(one), testing::to_prototypes({unit(2, 0), unit(2, 0, -1)}));
  v.require(std::abs(opposite - 0.126928) <= 1e-6, "L_proto opposite " + std::to_string(opposite));
  const double orthogonal = instance_prototype_loss(testing::to_eigen(one), testing::to_prototypes({unit(2, 0), unit(2, 1)}));
  v.require(std::abs(orthogonal - 0.313262) <= 1e-6, "L_proto orthogonal " + std::to_string(orthogonal));
  const testing::Groups three{{unit(2, 0), unit(2, 1)}, {unit(2, 1, -1)}, {unit(2, 0, -1)}};
  const double same = instance_prototype_loss(testing::to_eigen(three), testing::to_prototypes({unit(2, 1), unit(2, 1), unit(2, 1)}));
  v.require(std::abs(same - std::log(3.0)) <= 1e-12, "L_proto identical prototypes " + std::to_string(same));
  const testing::Groups pair{{unit(2, 0)}, {unit(2, 1)}};
  const double log2 = instance_prototype_loss(testing::to_eigen(pair), testing::to_prototypes({unit(2, 0), unit(2, 0)}));
  v.require(std::abs(log2 - std::log(2.0)) <= 1e-12, "L_proto log 2 case " + std::to_string(log2));
  if (v.pass) v.detail = "1000 cases, max gap " + std::to_string(worst) + "; L_ins log(1+2e^-2), L_proto 0.126928, 0.313262, log 2, log 3 reproduced";
  return v;
}

// Gaussian clusters whose class signal lives on 4 axes of a 32-dim space,
// next to 16 high-variance nuisance axes and a shared offset direction.
EmbeddingDataset ablation_dataset() {
  SyntheticSpec spec;
  spec.num_classes = 4;
  spec.dim = 32;
  spec.separation = 6.0;
  spec.sigma = 1.0;
  spec.nuisance_dims = 16;
  spec.nuisance_scale = 3.0;
  spec.offset = 5.0;
  spec.train_per_class = 32;
  spec.test_per_class = 50;
  spec.seed = 1;
  spec.template_id = "clusters";
  return make_synthetic_dataset(spec);
}

std::vector<std::uint64_t> twenty_seeds() {
  std::vector<std::uint64_t> s(20);
  for (std::uint64_t i = 0; i < 20; ++i) s[i] = i;
  return s;
}

Verdict ablation_ordering() {
  Verdict v;
  const auto start = Clock::now();
  ExperimentGrid grid;
  grid.k_values = {8};
  grid.seeds = twenty_seeds();
  grid.loss_variants = {LossVariant::kFull, LossVariant::kProtoOnly, LossVariant::kInstanceMean};
  const auto table = run_ablation(ablation_dataset(), grid, {});
  const double full = table.rows[0].accuracy.mean, proto = table.rows[1].accuracy.mean, mean = table.rows[2].accuracy.mean;
  const double t = seconds_since(start);
  v.require(full >= proto, "full " + fmt(full) + " < proto_only " + fmt(proto));
  v.require(proto >= mean - 0.02, "proto_only " + fmt(proto) + " < instance_mean " + fmt(mean) + " - 0.02");
  v.require(t < 300.0, "runtime " + fmt(t, 1) + " s");
  const std::string summary = "full " + fmt(full) + ", proto_only " + fmt(proto) + ", instance_mean " + fmt(mean) + " (" + fmt(t, 1) + " s)";
  v.detail = v.pass ? summary : v.detail + " [" + summary + "]";
  return v;
}

Verdict noise_trend() {
  Verdict v;
  ExperimentGrid grid;
  grid.k_values = {8, 16};
  grid.seeds = twenty_seeds();
  grid.noise_levels = {0, 1, 3};
  const auto table = run_noise_sweep(ablation_dataset(), grid, {});
  std::string summary;
  for (std::size_t k : {8u, 16u}) {
    double d0 = -1, d1 = 0, d3 = 0;
    for (const auto& r : table.rows) {
      if (r.k_shot != k) continue;
      if (r.noise == 0) {
        d0 = r.drop.mean;
        for (double d : r.per_seed_drop) v.require(d == 0.0, "k=" + std::to_string(k) + " clean drop " + std::to_string(d));
      }
      if (r.noise == 1) d1 = r.drop.mean;
      if (r.noise == 3) d3 = r.drop.mean;
    }
    v.require(d0 == 0.0, "k=" + std::to_string(k) + " drop(m=0) " + std::to_string(d0));
    v.require(d3 >= d1, "k=" + std::to_string(k) + " drop(m=3) " + fmt(d3) + " < drop(m=1) " + fmt(d1));
    summary += (summary.empty() ? "" : "; ") + std::string("k=") + std::to_string(k) + " drop m1 " + fmt(d1) + ", m3 " + fmt(d3);
  }
  v.detail = v.pass ? summary : v.detail + " [" + summary + "]";
  return v;
}

Verdict ensemble_invariances() {
  Verdict v;
  // Single scorer on a real evaluation: ensemble prediction == raw prediction for every instance.
  const auto ds = load_dataset(testing::data_file("separable.ndjson"));
  TrainConfig cfg;
  cfg.steps = 30;
  const auto trained = train(ds, sample_episode(ds, 4, 4, 0), cfg);
  for (const auto& scorer : {make_proto_scorer(trained.encoder, trained.prototypes), make_manual_scorer(4)}) {
    const auto result = evaluate(ds, std::vector<NamedScorer>{scorer}, 4);
    for (const auto& p : result.predictions) {
      const auto& raw = p.per_scorer.front();
      const auto ens = ensemble_scores(std::vector<ClassScores>{raw}, {{scorer.id}});
      v.require(predict(ens) == predict(raw) && p.predicted == predict(raw), scorer.id + " instance " + p.instance_id);
    }
  }
  const auto failures = testing::ensemble_invariance_failures(1000, 2718);
  v.require(failures.empty(), failures.empty() ? "" : failures.front());
  const auto s = standard_scale(std::vector<double>{2, 4, 6});
  v.require(std::abs(s[0] + 1.224745) <= 1e-6 && std::abs(s[1]) <= 1e-6 && std::abs(s[2] - 1.224745) <= 1e-6, "standard_scale([2,4,6])");
  if (v.pass) v.detail = "single-scorer identity on 400 predictions, 1000 affine cases, standard_scale([2,4,6]) ok";
  return v;
}

Verdict inference_contracts() {
  Verdict v;
  const auto failures = testing::proto_score_failures(1000, 1618);
  v.require(failures.empty(), failures.empty() ? "" : failures.front());
  bool ties = true;
  for (int rep = 0; rep < 100; ++rep) {
    ties = ties && predict(std::vector<double>{0.5, 0.5}) == 0 && predict(std::vector<double>{0.1, 0.4, 0.4, 0.1}) == 1;
  }
  v.require(ties, "tie-break not lowest index");
  if (v.pass) v.detail = "1000 cases sum to 1 and are rescaling-invariant; ties go to the lowest index";
  return v;
}

Verdict determinism(const fs::path& work) {
  Verdict v;
  const std::string ds = testing::data_file("separable.ndjson").string();
  const std::string a = (work / "a.ndjson").string(), b = (work / "b.ndjson").string();
  v.require(cli_run({"train", "--dataset", ds, "--seed", "3", "--noise", "2", "--out", a}) == 0, "train a");
  v.require(cli_run({"train", "--dataset", ds, "--seed", "3", "--noise", "2", "--out", b}) == 0, "train b");
  v.require(read_text_file(a) == read_text_file(b), "checkpoints differ");

  const std::string grid_dir = (work / "grid").string();
  const std::vector<std::string> grid{"grid",   "--dataset", ds,      "--k",         "1,2",   "--seed", "0,1,2",
                                      "--noise", "0,1",      "--variant", "full,proto_only", "--out-dir", grid_dir};
  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(grid_dir)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files[e.path().string()] = read_text_file(e.path());
    }
    return files;
  };
  v.require(cli_run(grid) == 0, "grid first run");
  const auto before = snapshot();
  auto rerun = grid;
  rerun.insert(rerun.end(), {"--jobs", "4"});
  v.require(cli_run(rerun) == 0, "grid rerun");
  const auto manifest = nlohmann::json::parse(read_text_file(fs::path(grid_dir) / "manifest.json"));
  v.require(manifest["cells_computed"] == 0, "rerun recomputed " + manifest["cells_computed"].dump() + " cells");
  v.require(snapshot() == before, "rerun changed outputs");
  if (v.pass) v.detail = "byte-identical checkpoints; grid rerun reused " + manifest["cells_reused"].dump() + " cells, outputs unchanged";
  return v;
}

Verdict end_to_end(const fs::path& work) {
  Verdict v;
  const auto start = Clock::now();
  const std::string ds = testing::data_file("separable.ndjson").string();
  const std::string cp = (work / "e2e.ndjson").string(), report = (work / "e2e.json").string();
  std::string out;
  v.require(cli_run({"validate", ds}, &out) == 0 && out.find("0 errors") != std::string::npos, "validate");
  v.require(cli_run({"sample", "--dataset", ds, "--k", "8", "--seed", "0", "--out", (work / "episode.json").string()}) == 0, "sample");
  v.require(cli_run({"train", "--dataset", ds, "--k", "8", "--seed", "0", "--out", cp}) == 0, "train");
  v.require(cli_run({"eval", "--dataset", ds, "--checkpoint", cp, "--scorers", "proto", "--out", report}) == 0, "eval");
  v.require(cli_run({"probe", "--checkpoint", cp, "--vocab", ds, "--top-k", "5", "--out", (work / "probe.ndjson").string()}) == 0, "probe");
  const double t = seconds_since(start);
  double accuracy = -1.0;
  if (fs::exists(report)) accuracy = nlohmann::json::parse(read_text_file(report))["accuracy"].get<double>();
  v.require(accuracy == 1.0, "accuracy " + std::to_string(accuracy));
  v.require(t < 60.0, "runtime " + fmt(t, 1) + " s");
  if (v.pass) v.detail = "accuracy 1.0 in " + fmt(t, 2) + " s";
  return v;
}

}  // namespace

int main() {
  const fs::path work = testing::scratch_dir("acceptance");
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient suite", gradient_suite},
      {"loss oracle", loss_oracle},
      {"ablation ordering", ablation_ordering},
      {"noise robustness trend", noise_trend},
      {"ensemble invariances", ensemble_invariances},
      {"inference contracts", inference_contracts},
      {"determinism", [&] { return determinism(work); }},
      {"end-to-end fixture run", [&] { return end_to_end(work); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    std::fflush(stdout);
    failed += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
