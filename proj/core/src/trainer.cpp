#include "protoverb/trainer.hpp"

#include <cmath>
#include <span>
#include <string>

#include "protoverb/errors.hpp"
#include "protoverb/gradients.hpp"
#include "protoverb/rng.hpp"

namespace protoverb {

namespace {

std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> as_span(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be > 0");
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) throw ConfigError("init_scale must be > 0");
  if (prototype_dim < 1) throw ConfigError("prototype_dim must be >= 1");
}

ProjectionEncoder init_encoder(std::size_t input_dim, const TrainConfig& config) {
  const double bound = config.init_scale / std::sqrt(static_cast<double>(input_dim));
  Rng rng(derive_seed(config.seed, 1));
  ProjectionEncoder encoder{Matrix(config.prototype_dim, input_dim)};
  for (Eigen::Index r = 0; r < encoder.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < encoder.weight.cols(); ++c) encoder.weight(r, c) = rng.uniform(-bound, bound);
  }
  return encoder;
}

PrototypeSet init_prototypes(const std::vector<std::string>& class_names, std::size_t input_dim,
                             const TrainConfig& config) {
  const double bound = config.init_scale / std::sqrt(static_cast<double>(input_dim));
  PrototypeSet set{Matrix(class_names.size(), config.prototype_dim)};
  for (std::size_t n = 0; n < class_names.size(); ++n) {
    Rng rng(derive_seed(derive_seed(config.seed, 2), fnv1a64(class_names[n])));
    for (Eigen::Index c = 0; c < set.prototypes.cols(); ++c) {
      set.prototypes(static_cast<Eigen::Index>(n), c) = rng.uniform(-bound, bound);
    }
  }
  return set;
}

std::vector<std::vector<Vector>> support_embeddings(const EmbeddingDataset& dataset, const Episode& episode) {
  const auto indices = episode.training_groups();
  std::vector<std::vector<Vector>> groups(episode.n_way);
  for (std::size_t n = 0; n < episode.n_way; ++n) {
    for (std::size_t index : indices[n]) {
      const auto& e = dataset.records.at(index).embedding;
      groups[n].push_back(Eigen::Map<const Vector>(e.data(), static_cast<Eigen::Index>(e.size())));
    }
  }
  return groups;
}

TrainResult train(const std::vector<std::vector<Vector>>& raw_groups, const std::vector<std::string>& class_names,
                  const TrainConfig& config) {
  config.validate();
  if (raw_groups.size() != class_names.size()) throw ConfigError("train: one class name per group required");
  const PackedBatch batch = PackedBatch::from_groups(raw_groups);
  const auto input_dim = static_cast<std::size_t>(batch.inputs.cols());

  TrainResult result{init_encoder(input_dim, config), init_prototypes(class_names, input_dim, config), {}};

  if (config.loss_variant == LossVariant::kInstanceMean) {
    const ClassGroups projected = batch.project(result.encoder);
    for (std::size_t n = 0; n < projected.size(); ++n) {
      if (projected[n].empty()) {
        throw DataError("instance_mean: class '" + class_names[n] + "' has no support instances");
      }
      Vector sum = Vector::Zero(static_cast<Eigen::Index>(config.prototype_dim));
      for (const auto& v : projected[n]) sum += v;
      result.prototypes.prototypes.row(static_cast<Eigen::Index>(n)) =
          (sum / static_cast<double>(projected[n].size())).transpose();
    }
    return result;
  }

  const AdamConfig adam = config.adam();
  AdamState w_state = AdamState::zeros(static_cast<std::size_t>(result.encoder.weight.size()));
  AdamState c_state = AdamState::zeros(static_cast<std::size_t>(result.prototypes.prototypes.size()));
  result.loss_trace.reserve(config.steps);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const LossGradients grads = loss_gradients(batch, result.encoder, result.prototypes, config.loss_variant);
    result.loss_trace.push_back({step, grads.loss});
    adam_step(as_span(result.encoder.weight), as_span(grads.weight), w_state, adam);
    adam_step(as_span(result.prototypes.prototypes), as_span(grads.prototypes), c_state, adam);
  }
  return result;
}

TrainResult train(const EmbeddingDataset& dataset, const Episode& episode, const TrainConfig& config) {
  const std::vector<std::string> names(dataset.header.class_names.begin(),
                                       dataset.header.class_names.begin() + static_cast<std::ptrdiff_t>(episode.n_way));
  return train(support_embeddings(dataset, episode), names, config);
}

}  // namespace protoverb
