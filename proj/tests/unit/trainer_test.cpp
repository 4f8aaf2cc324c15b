#include <gtest/gtest.h>

#include <cmath>

#include "protoverb/episode.hpp"
#include "protoverb/errors.hpp"
#include "protoverb/synthetic.hpp"
#include "protoverb/trainer.hpp"
#include "test_util.hpp"

namespace protoverb {
namespace {

std::vector<std::vector<Vector>> raw_groups(const EmbeddingDataset& ds, std::size_t k, std::uint64_t seed) {
  return support_embeddings(ds, sample_episode(ds, ds.num_classes(), k, seed));
}

EmbeddingDataset clusters(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.seed = seed;
  return make_synthetic_dataset(spec);  // 4 classes, 16 dims, separation 4 sigma
}

TEST(Train, ZeroStepsReturnsInitialization) {
  const auto ds = clusters(1);
  TrainConfig cfg;
  cfg.steps = 0;
  cfg.seed = 5;
  const auto result = train(raw_groups(ds, 4, 0), ds.header.class_names, cfg);
  EXPECT_TRUE(result.loss_trace.empty());
  EXPECT_EQ(result.encoder.weight, init_encoder(ds.dim(), cfg).weight);
  EXPECT_EQ(result.prototypes.prototypes, init_prototypes(ds.header.class_names, ds.dim(), cfg).prototypes);
  EXPECT_EQ(result.prototypes.dim(), kDefaultPrototypeDim);
}

TEST(Train, InstanceMeanSingleShotEqualsProjection) {
  const auto ds = clusters(2);
  TrainConfig cfg;
  cfg.loss_variant = LossVariant::kInstanceMean;
  const auto groups = raw_groups(ds, 1, 3);
  const auto result = train(groups, ds.header.class_names, cfg);
  EXPECT_TRUE(result.loss_trace.empty());
  for (std::size_t n = 0; n < groups.size(); ++n) {
    EXPECT_EQ(result.prototypes.prototype(n), project(result.encoder, groups[n][0]));
  }
}

TEST(Train, InstanceMeanIsArithmeticMean) {
  const auto ds = clusters(2);
  TrainConfig cfg;
  cfg.loss_variant = LossVariant::kInstanceMean;
  const auto groups = raw_groups(ds, 5, 3);
  const auto result = train(groups, ds.header.class_names, cfg);
  for (std::size_t n = 0; n < groups.size(); ++n) {
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(result.encoder.output_dim()));
    for (const auto& h : groups[n]) mean += project(result.encoder, h);
    mean /= static_cast<double>(groups[n].size());
    EXPECT_LT((result.prototypes.prototype(n) - mean).norm(), 1e-12);
  }
}

TEST(Train, TraceHasOneFiniteEntryPerStep) {
  const auto ds = clusters(3);
  TrainConfig cfg;
  cfg.steps = 37;
  const auto result = train(raw_groups(ds, 4, 1), ds.header.class_names, cfg);
  ASSERT_EQ(result.loss_trace.size(), 37u);
  for (std::size_t t = 0; t < result.loss_trace.size(); ++t) {
    EXPECT_EQ(result.loss_trace[t].step, t);
    EXPECT_TRUE(std::isfinite(result.loss_trace[t].loss.total));
  }
}

TEST(Train, BitIdenticalAcrossRuns) {
  const auto ds = clusters(4);
  TrainConfig cfg;
  cfg.seed = 9;
  cfg.steps = 50;
  const auto groups = raw_groups(ds, 8, 2);
  const auto a = train(groups, ds.header.class_names, cfg);
  const auto b = train(groups, ds.header.class_names, cfg);
  EXPECT_EQ(a.encoder.weight, b.encoder.weight);
  EXPECT_EQ(a.prototypes.prototypes, b.prototypes.prototypes);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(Train, RelabelingClassesPermutesPrototypes) {
  const auto ds = clusters(5);
  TrainConfig cfg;
  cfg.steps = 30;
  const auto groups = raw_groups(ds, 4, 7);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<std::vector<Vector>> permuted(4);
  std::vector<std::string> names(4);
  for (std::size_t n = 0; n < 4; ++n) {
    permuted[n] = groups[perm[n]];
    names[n] = ds.header.class_names[perm[n]];
  }
  const auto a = train(groups, ds.header.class_names, cfg);
  const auto b = train(permuted, names, cfg);
  EXPECT_LT((a.encoder.weight - b.encoder.weight).cwiseAbs().maxCoeff(), 1e-9);
  for (std::size_t n = 0; n < 4; ++n) {
    EXPECT_LT((b.prototypes.prototype(n) - a.prototypes.prototype(perm[n])).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Train, LossDecreasesOnSeparatedClusters) {
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ds = clusters(1000 + seed);
    TrainConfig cfg;
    cfg.seed = seed;
    const auto groups = raw_groups(ds, 8, seed);
    const auto result = train(groups, ds.header.class_names, cfg);
    const auto batch_final = [&] {
      ClassGroups projected(groups.size());
      for (std::size_t n = 0; n < groups.size(); ++n) {
        for (const auto& h : groups[n]) projected[n].push_back(project(result.encoder, h));
      }
      return total_loss(projected, result.prototypes).total;
    }();
    decreased += batch_final < result.loss_trace.front().loss.total ? 1 : 0;
  }
  EXPECT_GE(decreased, 95);
}

TEST(TrainConfig, RejectsBadValues) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.prototype_dim = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace protoverb
