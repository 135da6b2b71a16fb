#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "loyalty/cluster.hpp"
#include "oracles.hpp"

using namespace loyalty;

namespace {

FeatureMatrix three_blobs() { return oracle::blobs({{0, 0}, {10, 0}, {5, 9}}, 30, 1.0, 31); }

}  // namespace

TEST(KMeans, SeparatedPairs) {
  FeatureMatrix pts{{0, 0}, {0, 1}, {10, 10}, {10, 11}};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto m = kmeans_fit(pts, 2, seed);
    EXPECT_EQ(m.labels[0], m.labels[1]);
    EXPECT_EQ(m.labels[2], m.labels[3]);
    EXPECT_NE(m.labels[0], m.labels[2]);
  }
}

TEST(KMeans, SingleClusterCentroidIsZero) {
  auto m = kmeans_fit(three_blobs(), 1, 1);
  ASSERT_EQ(m.centroids.size(), 1u);
  for (double v : m.centroids[0]) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(KMeans, KEqualsNHasZeroInertia) {
  FeatureMatrix pts{{0, 1}, {2, 3}, {5, 1}, {7, 7}, {1, 9}};
  auto m = kmeans_fit(pts, 5, 3);
  EXPECT_NEAR(m.inertia, 0.0, 1e-12);
}

TEST(KMeans, Errors) {
  FeatureMatrix pts{{0, 1}, {2, 3}};
  EXPECT_THROW(kmeans_fit(pts, 3, 0), std::invalid_argument);
  EXPECT_THROW(kmeans_fit(pts, 0, 0), std::invalid_argument);
  EXPECT_THROW(kmeans_fit(FeatureMatrix{{0, 1}, {2}}, 1, 0), std::invalid_argument);
}

TEST(KMeans, LloydNeverIncreasesInertia) {
  auto pts = oracle::blobs({{0, 0, 0}, {3, 3, 0}, {0, 3, 3}, {3, 0, 3}}, 25, 1.5, 9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t k = 2; k <= 6; ++k) {
      auto m = kmeans_fit(pts, k, seed);
      for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
        EXPECT_LE(m.inertia_history[i], m.inertia_history[i - 1] + 1e-12);
      }
      std::vector<std::size_t> sizes(k, 0);
      for (auto l : m.labels) ++sizes[l];
      for (auto s : sizes) EXPECT_GT(s, 0u);
    }
  }
}

TEST(KMeans, Deterministic) {
  auto pts = three_blobs();
  auto a = kmeans_fit(pts, 4, 12);
  auto b = kmeans_fit(pts, 4, 12);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, StandardizerDropsConstantColumns) {
  FeatureMatrix pts{{1, 5, 0}, {2, 5, 1}, {3, 5, 2}};
  auto s = Standardizer::fit(pts);
  EXPECT_EQ(s.kept_columns, (std::vector<std::size_t>{0, 2}));
  auto row = s.apply(std::vector<double>{2, 5, 1});
  ASSERT_EQ(row.size(), 2u);
  EXPECT_NEAR(row[0], 0.0, 1e-12);
}

TEST(Elbow, ThreeBlobs) {
  auto pts = three_blobs();
  auto sweep = elbow_sweep(pts, 10, 7);
  EXPECT_EQ(sweep.k, 3u);
  EXPECT_EQ(elbow_select(pts, 10, 7), 3u);
  ASSERT_EQ(sweep.inertia.size(), 10u);
  for (std::size_t i = 1; i < sweep.inertia.size(); ++i) EXPECT_LE(sweep.inertia[i], sweep.inertia[i - 1]);
  // brute-force kink check: the drop into k=3 dwarfs every later drop
  const double drop3 = sweep.inertia[1] - sweep.inertia[2];
  for (std::size_t i = 3; i < sweep.inertia.size(); ++i) {
    EXPECT_GT(drop3, 5.0 * (sweep.inertia[i - 1] - sweep.inertia[i]));
  }
}

TEST(Elbow, TwoBlobs) {
  auto pts = oracle::blobs({{0, 0}, {12, 12}}, 30, 1.0, 13);
  EXPECT_EQ(elbow_select(pts, 10, 7), 2u);
}

TEST(Elbow, IdenticalPoints) {
  FeatureMatrix pts(20, std::vector<double>{1.5, -2.0, 3.0});
  auto sweep = elbow_sweep(pts, 10, 7);
  EXPECT_EQ(sweep.k, 1u);
  for (double v : sweep.inertia) EXPECT_EQ(v, 0.0);
}

TEST(Elbow, MonotoneOnManySeeds) {
  auto pts = oracle::blobs({{0, 0}, {4, 1}, {2, 5}, {7, 7}, {-3, 6}}, 12, 1.7, 101);
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    auto sweep = elbow_sweep(pts, 10, seed);
    for (std::size_t i = 1; i < sweep.inertia.size(); ++i) {
      EXPECT_LE(sweep.inertia[i], sweep.inertia[i - 1]) << "seed " << seed << " k " << i + 1;
    }
  }
}

TEST(Elbow, ChoiceRule) {
  EXPECT_EQ(elbow_choice(std::vector<double>{10, 2, 1.5, 1.2, 1.0}), 2u);
  EXPECT_EQ(elbow_choice(std::vector<double>{5, 5, 5}), 1u);
  EXPECT_EQ(elbow_choice(std::vector<double>{4, 3}), 1u);
  // straight line: every interior point on the chord, tie goes to k = 1
  EXPECT_EQ(elbow_choice(std::vector<double>{4, 3, 2, 1}), 1u);
}
