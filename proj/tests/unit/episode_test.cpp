#include <gtest/gtest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "protoverb/episode.hpp"
#include "protoverb/errors.hpp"
#include "protoverb/rng.hpp"
#include "protoverb/synthetic.hpp"
#include "test_util.hpp"

namespace protoverb {
namespace {

std::set<std::string> support_ids(const Episode& e) {
  std::set<std::string> ids;
  for (const auto& klass : e.support) {
    for (const auto& r : klass) ids.insert(r.id);
  }
  return ids;
}

std::size_t hamming(const Episode& e) {
  std::size_t d = 0;
  for (std::size_t n = 0; n < e.support.size(); ++n) {
    for (const auto& r : e.support[n]) d += r.label != n ? 1 : 0;
  }
  return d;
}

class EpisodeTest : public ::testing::Test {
 protected:
  EmbeddingDataset fixture = load_dataset(testing::data_file("fixture_40.ndjson"));
};

TEST_F(EpisodeTest, OneShotGivesOnePerClass) {
  const auto e = sample_episode(fixture, 4, 1, 0);
  ASSERT_EQ(e.support.size(), 4u);
  for (std::size_t n = 0; n < 4; ++n) {
    ASSERT_EQ(e.support[n].size(), 1u);
    EXPECT_EQ(fixture.records[e.support[n][0].record_index].label, n);
  }
}

TEST_F(EpisodeTest, SameInputsSameEpisode) {
  EXPECT_EQ(sample_episode(fixture, 4, 3, 42), sample_episode(fixture, 4, 3, 42));
  EXPECT_EQ(episode_to_json(sample_episode(fixture, 4, 3, 42)).dump(), episode_to_json(sample_episode(fixture, 4, 3, 42)).dump());
}

TEST_F(EpisodeTest, SeedsZeroAndOneDiffer) {
  // A collision needs every class to draw the same 2-subset of 10: (1/45)^4.
  EXPECT_NE(support_ids(sample_episode(fixture, 4, 2, 0)), support_ids(sample_episode(fixture, 4, 2, 1)));
}

TEST_F(EpisodeTest, SamplesWithoutReplacementAndCoversUniformly) {
  std::vector<int> hits(fixture.records.size(), 0);
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto e = sample_episode(fixture, 4, 3, seed);
    EXPECT_EQ(support_ids(e).size(), 12u);
    for (const auto& klass : e.support) {
      for (const auto& r : klass) ++hits[r.record_index];
    }
  }
  // Each record is drawn with probability 3/10: expected 600 hits.
  for (int h : hits) EXPECT_NEAR(h, 600, 90);
}

TEST_F(EpisodeTest, InsufficientRecordsAndBadArguments) {
  EXPECT_THROW(sample_episode(fixture, 4, 11, 0), DataError);
  EXPECT_THROW(sample_episode(fixture, 5, 1, 0), ConfigError);
  EXPECT_THROW(sample_episode(fixture, 0, 1, 0), ConfigError);
  EXPECT_THROW(sample_episode(fixture, 4, 0, 0), ConfigError);
}

TEST_F(EpisodeTest, SubsetOfClasses) {
  const auto e = sample_episode(fixture, 2, 4, 3);
  EXPECT_EQ(e.support.size(), 2u);
  EXPECT_EQ(e.training_groups().size(), 2u);
}

TEST_F(EpisodeTest, NoiseZeroIsIdentity) {
  const auto e = sample_episode(fixture, 4, 4, 5);
  auto noisy = inject_noise(e, 0, 99);
  EXPECT_EQ(noisy.support, e.support);
  EXPECT_EQ(noisy.num_corrupted_labels(), 0u);
}

TEST_F(EpisodeTest, HammingDistanceEqualsM) {
  const auto e = sample_episode(fixture, 4, 4, 5);
  for (std::size_t m = 0; m <= 16; ++m) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto noisy = inject_noise(e, m, s);
      ASSERT_EQ(hamming(noisy), m);
      ASSERT_EQ(noisy.num_corrupted_labels(), m);
      ASSERT_EQ(noisy.original_labels, e.original_labels);
    }
  }
}

TEST_F(EpisodeTest, FullCorruptionChangesEveryLabel) {
  const auto noisy = inject_noise(sample_episode(fixture, 4, 2, 1), 8, 3);
  for (std::size_t n = 0; n < 4; ++n) {
    for (const auto& r : noisy.support[n]) EXPECT_NE(r.label, n);
  }
  EXPECT_THROW(inject_noise(sample_episode(fixture, 4, 2, 1), 9, 3), ConfigError);
}

TEST_F(EpisodeTest, CorruptionIsNestedAcrossM) {
  const auto e = sample_episode(fixture, 4, 8, 2);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto one = inject_noise(e, 1, s);
    const auto three = inject_noise(e, 3, s);
    for (std::size_t n = 0; n < 4; ++n) {
      for (std::size_t i = 0; i < 8; ++i) {
        if (one.support[n][i].label != n) EXPECT_EQ(three.support[n][i].label, one.support[n][i].label);
      }
    }
  }
}

TEST_F(EpisodeTest, WrongLabelsAreUniform) {
  const auto e = sample_episode(fixture, 4, 1, 0);
  std::vector<int> counts(4, 0);
  for (std::uint64_t s = 0; s < 3000; ++s) {
    const auto noisy = inject_noise(e, 4, s);
    ++counts[noisy.support[0][0].label];
  }
  EXPECT_EQ(counts[0], 0);
  for (int n = 1; n < 4; ++n) EXPECT_NEAR(counts[n], 1000, 100);
}

TEST_F(EpisodeTest, ReinjectionReplacesPreviousCorruption) {
  const auto e = sample_episode(fixture, 4, 3, 4);
  EXPECT_EQ(inject_noise(inject_noise(e, 5, 1), 2, 7), inject_noise(e, 2, 7));
}

}  // namespace
}  // namespace protoverb
