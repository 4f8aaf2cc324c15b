#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protoverb/embedding_store.hpp"
#include "protoverb/encoder.hpp"

namespace protoverb {

inline constexpr const char* kProtoScorerId = "proto";
inline constexpr const char* kManualScorerId = "manual";
inline constexpr const char* kEnsembleScorerId = "ensemble";

struct ClassScores {
  std::vector<double> scores;
  std::string scorer_id;
  std::string instance_id;
};

// Softmax over cosine similarities between W*h and each prototype.
// Throws NumericalError when the projection has zero norm.
ClassScores proto_scores(const ProjectionEncoder& encoder, const PrototypeSet& prototypes, std::span<const double> h,
                         std::string instance_id = {});

// Scores within kTieTolerance * max(1, |top|) of the top score count as tied,
// so rounding noise in standardized ensembles cannot flip a prediction.
inline constexpr double kTieTolerance = 1e-12;

// Argmax; ties go to the lowest index.
std::size_t predict(std::span<const double> scores);
inline std::size_t predict(const ClassScores& scores) { return predict(scores.scores); }

// Manual verbalizer: the score of class y is the arithmetic mean of its
// label-word log-probabilities. Only the first `num_classes` classes are
// scored (all of them when 0). Throws DataError when the record carries no
// label-word log-probs.
ClassScores manual_scores(const EmbeddingRecord& record, std::size_t num_classes = 0);

// (x - mean) / population std. A constant vector maps to all zeros.
// Throws ConfigError when fewer than two scores are given.
std::vector<double> standard_scale(std::span<const double> scores);

struct EnsembleConfig {
  std::vector<std::string> scorer_ids;

  void validate() const;  // >= 1 id, ids unique
};

// Mean of the standard-scaled score vectors of the configured scorers, taken
// in config order. Throws DataError when a configured scorer is missing or the
// class counts differ.
ClassScores ensemble_scores(std::span<const ClassScores> per_scorer, const EnsembleConfig& config);

using Scorer = std::function<ClassScores(const EmbeddingRecord&)>;

struct NamedScorer {
  std::string id;
  Scorer score;
};

struct Prediction {
  std::string instance_id;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::vector<ClassScores> per_scorer;  // configured scorers, plus the ensemble when > 1
};

struct EvalResult {
  double accuracy = 0.0;
  std::vector<std::optional<double>> per_class;  // nullopt for classes without test records
  std::size_t n_test = 0;
  std::vector<std::string> scorer_ids;  // configured ids, then "ensemble" when > 1
  std::vector<Prediction> predictions;  // dataset order
};

// Scores every test record whose label is below num_classes. With one scorer
// its prediction is used directly; with several, the ensemble's. Records are
// scored on up to `jobs` threads; the predictions list keeps dataset order.
// Throws DataError on an empty test split.
EvalResult evaluate(const EmbeddingDataset& dataset, std::span<const NamedScorer> scorers, std::size_t num_classes,
                    std::size_t jobs = 1);

// Copies the encoder and prototypes, so temporaries are safe to pass.
NamedScorer make_proto_scorer(const ProjectionEncoder& encoder, const PrototypeSet& prototypes);
NamedScorer make_manual_scorer(std::size_t num_classes);

}  // namespace protoverb
