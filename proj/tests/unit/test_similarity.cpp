// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>

#include "drise/error.hpp"
#include "drise/similarity.hpp"
#include "test_support.hpp"

namespace drise {
namespace {

DetectionVector one_hot(BBox box, std::size_t cls, std::size_t classes, double objectness = 1.0) {
  DetectionVector d{box, objectness, std::vector<double>(classes, 0.0)};
  d.scores[cls] = 1.0;
  return d;
}

TEST(Similarity, IdentityIsOne) {
  const DetectionVector t = one_hot({0, 0, 10, 10}, 1, 3);
  EXPECT_DOUBLE_EQ(similarity(t, t, {}), 1.0);
}

TEST(Similarity, DisjointBoxesAnnihilate) {
  const DetectionVector t = one_hot({0, 0, 10, 10}, 1, 3);
  const DetectionVector p = one_hot({20, 20, 30, 30}, 1, 3);
  EXPECT_DOUBLE_EQ(similarity(t, p, {}), 0.0);
}

TEST(Similarity, ObjectnessScalesProduct) {
  const DetectionVector t = one_hot({0, 0, 10, 10}, 0, 2);
  const DetectionVector p = one_hot({0, 0, 10, 10}, 0, 2, 0.5);
  EXPECT_DOUBLE_EQ(similarity(t, p, {true}), 0.5);
  EXPECT_DOUBLE_EQ(similarity(t, p, {false}), 1.0);
}

TEST(Similarity, ClassCountMismatchThrows) {
  EXPECT_THROW(similarity(one_hot({0, 0, 1, 1}, 0, 2), one_hot({0, 0, 1, 1}, 0, 3), {}), ContractError);
}

TEST(SimilarityProperty, EqualsProductOfFactors) {
  test::for_all(500, 11, [](auto& rng, int) {
    const std::size_t n = static_cast<std::size_t>(test::uniform_int(rng, 1, 8));
    const DetectionVector t{test::random_box(rng), 1.0, test::random_scores(rng, n)};
    const DetectionVector p{test::random_box(rng), test::uniform(rng, 0, 1), test::random_scores(rng, n)};
    const double expect = iou(t.bbox, p.bbox) * cosine_similarity(t.scores, p.scores) * p.objectness;
    const double s = similarity(t, p, {});
    EXPECT_NEAR(s, expect, 1e-12);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0 + 1e-12);
  });
}

TEST(MaxSimilarity, EmptyProposalsGiveZero) {
  EXPECT_DOUBLE_EQ(max_similarity(one_hot({0, 0, 1, 1}, 0, 2), {}, {}), 0.0);
}

TEST(MaxSimilarity, PicksExactMatchOverJunk) {
  const DetectionVector t = one_hot({0, 0, 10, 10}, 2, 3);
  const std::vector<DetectionVector> props{one_hot({50, 50, 60, 60}, 2, 3), t, one_hot({0, 0, 10, 10}, 0, 3)};
  EXPECT_DOUBLE_EQ(max_similarity(t, props, {}), 1.0);
}

TEST(MaxSimilarity, PicksLargestOfHandBuiltScores) {
  // Same box and class; objectness sets each similarity directly.
  const DetectionVector t = one_hot({0, 0, 10, 10}, 0, 2);
  const std::vector<DetectionVector> props{one_hot({0, 0, 10, 10}, 0, 2, 0.2), one_hot({0, 0, 10, 10}, 0, 2, 0.7),
                                           one_hot({0, 0, 10, 10}, 0, 2, 0.4)};
  EXPECT_DOUBLE_EQ(max_similarity(t, props, {}), 0.7);
}

TEST(PairwiseWeights, EmptyProposalsGiveZeroMatrix) {
  const std::vector<DetectionVector> targets{one_hot({0, 0, 1, 1}, 0, 1)};
  const std::vector<std::vector<DetectionVector>> sets{{}};
  const WeightMatrix w = pairwise_weights(targets, sets, {});
  ASSERT_EQ(w.targets(), 1u);
  ASSERT_EQ(w.masks(), 1u);
  EXPECT_EQ(w.at(0, 0), 0.0);
}

TEST(PairwiseWeightsProperty, MatchesPerCellMaxSimilarityAndIgnoresOrder) {
  test::for_all(100, 12, [](auto& rng, int) {
    const std::size_t classes = 3;
    std::vector<DetectionVector> targets;
    for (int t = 0; t < 2; ++t) {
      targets.push_back(one_hot(test::random_box(rng), static_cast<std::size_t>(test::uniform_int(rng, 0, 2)), classes));
    }
    std::vector<std::vector<DetectionVector>> sets(3);
    for (auto& set : sets) {
      const int k = test::uniform_int(rng, 0, 4);
      for (int j = 0; j < k; ++j) {
        set.push_back({test::random_box(rng), test::uniform(rng, 0, 1), test::random_scores(rng, classes)});
      }
    }
    const WeightMatrix w = pairwise_weights(targets, sets, {});
    for (std::size_t t = 0; t < 2; ++t) {
      for (std::size_t i = 0; i < 3; ++i) {
        double best = 0.0;
        for (const auto& p : sets[i]) best = std::max(best, similarity(targets[t], p, {}));
        EXPECT_EQ(w.at(t, i), best);
      }
    }
    for (auto& set : sets) std::reverse(set.begin(), set.end());
    EXPECT_EQ(pairwise_weights(targets, sets, {}), w);
  });
}

}  // namespace
}  // namespace drise
