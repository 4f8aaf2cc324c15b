#include "protoverb/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "protoverb/errors.hpp"
#include "protoverb/losses.hpp"
#include "protoverb/parallel.hpp"

namespace protoverb {

ClassScores proto_scores(const ProjectionEncoder& encoder, const PrototypeSet& prototypes, std::span<const double> h,
                         std::string instance_id) {
  const Vector v = project(encoder, h);
  if (static_cast<std::size_t>(v.size()) != prototypes.dim()) throw ConfigError("prototype dimension mismatch");
  const double norm = v.norm();
  if (norm == 0.0) throw NumericalError("proto_scores: zero-norm projection for '" + instance_id + "'");
  Eigen::RowVectorXd sims(prototypes.prototypes.rows());
  for (Eigen::Index n = 0; n < sims.size(); ++n) {
    const double pn = prototypes.prototypes.row(n).norm();
    if (pn == 0.0) throw NumericalError("proto_scores: zero-norm prototype " + std::to_string(n));
    sims(n) = prototypes.prototypes.row(n).dot(v) / (pn * norm);
  }
  const double lse = log_sum_exp(sims);
  ClassScores out{std::vector<double>(static_cast<std::size_t>(sims.size())), kProtoScorerId, std::move(instance_id)};
  for (Eigen::Index n = 0; n < sims.size(); ++n) out.scores[static_cast<std::size_t>(n)] = std::exp(sims(n) - lse);
  return out;
}

std::size_t predict(std::span<const double> scores) {
  if (scores.empty()) return 0;
  const double top = *std::max_element(scores.begin(), scores.end());
  const double tol = kTieTolerance * std::max(1.0, std::abs(top));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= top - tol) return i;
  }
  return 0;
}

ClassScores manual_scores(const EmbeddingRecord& record, std::size_t num_classes) {
  if (!record.label_word_logprobs) throw DataError("no label_word_logprobs for manual scoring", std::nullopt, record.id);
  const auto& lists = *record.label_word_logprobs;
  if (num_classes == 0) num_classes = lists.size();
  if (num_classes > lists.size()) throw DataError("label_word_logprobs cover too few classes", std::nullopt, record.id);
  ClassScores out{std::vector<double>(num_classes), kManualScorerId, record.id};
  for (std::size_t y = 0; y < num_classes; ++y) {
    if (lists[y].empty()) throw DataError("empty label-word list", std::nullopt, record.id);
    double sum = 0.0;
    for (double lp : lists[y]) sum += lp;
    out.scores[y] = sum / static_cast<double>(lists[y].size());
  }
  return out;
}

std::vector<double> standard_scale(std::span<const double> scores) {
  if (scores.size() < 2) throw ConfigError("standard_scale needs at least two scores");
  std::vector<double> out(scores.size(), 0.0);
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  if (*lo == *hi) return out;
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / n);
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - mean) / sd;
  return out;
}

void EnsembleConfig::validate() const {
  if (scorer_ids.empty()) throw ConfigError("ensemble needs at least one scorer");
  std::set<std::string> seen;
  for (const auto& id : scorer_ids) {
    if (!seen.insert(id).second) throw ConfigError("duplicate scorer id '" + id + "'");
  }
}

ClassScores ensemble_scores(std::span<const ClassScores> per_scorer, const EnsembleConfig& config) {
  config.validate();
  ClassScores out{{}, kEnsembleScorerId, {}};
  for (const auto& id : config.scorer_ids) {
    const auto it = std::find_if(per_scorer.begin(), per_scorer.end(), [&](const ClassScores& s) { return s.scorer_id == id; });
    if (it == per_scorer.end()) throw DataError("missing output of scorer '" + id + "'");
    if (out.scores.empty()) {
      out.scores.assign(it->scores.size(), 0.0);
      out.instance_id = it->instance_id;
    } else if (it->scores.size() != out.scores.size()) {
      throw DataError("scorer '" + id + "' reports " + std::to_string(it->scores.size()) + " classes, expected " +
                      std::to_string(out.scores.size()));
    }
    const auto scaled = standard_scale(it->scores);
    for (std::size_t i = 0; i < scaled.size(); ++i) out.scores[i] += scaled[i];
  }
  const double k = static_cast<double>(config.scorer_ids.size());
  for (double& s : out.scores) s /= k;
  return out;
}

EvalResult evaluate(const EmbeddingDataset& dataset, std::span<const NamedScorer> scorers, std::size_t num_classes,
                    std::size_t jobs) {
  if (scorers.empty()) throw ConfigError("evaluate: no scorers configured");
  EnsembleConfig config;
  for (const auto& s : scorers) config.scorer_ids.push_back(s.id);
  config.validate();

  std::vector<std::size_t> test;
  for (std::size_t i : dataset.indices(Split::kTest)) {
    if (*dataset.records[i].label < num_classes) test.push_back(i);
  }
  if (test.empty()) throw DataError("empty test split: nothing to evaluate");

  EvalResult result;
  result.scorer_ids = config.scorer_ids;
  const bool ensemble = scorers.size() > 1;
  if (ensemble) result.scorer_ids.emplace_back(kEnsembleScorerId);
  result.n_test = test.size();
  result.predictions.resize(test.size());

  parallel_for(test.size(), jobs, [&](std::size_t t) {
    const auto& record = dataset.records[test[t]];
    Prediction& p = result.predictions[t];
    p.instance_id = record.id;
    p.gold = *record.label;
    for (const auto& scorer : scorers) {
      auto s = scorer.score(record);
      s.scorer_id = scorer.id;
      s.instance_id = record.id;
      if (s.scores.size() != num_classes) {
        throw DataError("scorer '" + scorer.id + "' returned " + std::to_string(s.scores.size()) + " classes",
                        std::nullopt, record.id);
      }
      p.per_scorer.push_back(std::move(s));
    }
    if (ensemble) {
      p.per_scorer.push_back(ensemble_scores(p.per_scorer, config));
    }
    p.predicted = predict(p.per_scorer.back());
  });

  std::vector<std::size_t> correct(num_classes, 0);
  std::vector<std::size_t> total(num_classes, 0);
  std::size_t hits = 0;
  for (const auto& p : result.predictions) {
    ++total[p.gold];
    if (p.predicted == p.gold) {
      ++correct[p.gold];
      ++hits;
    }
  }
  result.accuracy = static_cast<double>(hits) / static_cast<double>(result.n_test);
  result.per_class.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (total[c] > 0) result.per_class[c] = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
  }
  return result;
}

NamedScorer make_proto_scorer(const ProjectionEncoder& encoder, const PrototypeSet& prototypes) {
  return {kProtoScorerId, [encoder, prototypes](const EmbeddingRecord& r) {
            return proto_scores(encoder, prototypes, r.embedding, r.id);
          }};
}

NamedScorer make_manual_scorer(std::size_t num_classes) {
  return {kManualScorerId, [num_classes](const EmbeddingRecord& r) { return manual_scores(r, num_classes); }};
}

}  // namespace protoverb
