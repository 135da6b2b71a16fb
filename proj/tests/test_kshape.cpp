#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "loyalty/kshape.hpp"
#include "oracles.hpp"

using namespace loyalty;

namespace {

Series sinusoid(std::size_t n, double shift) {
  Series s(n);
  for (std::size_t t = 0; t < n; ++t) s[t] = std::sin(2.0 * std::numbers::pi * (static_cast<double>(t) + shift) / 24.0);
  return s;
}

SeriesMatrix matrix_of(const std::vector<Series>& rows) {
  SeriesMatrix m;
  m.rows = rows;
  for (std::size_t i = 0; i < rows.size(); ++i) m.keys.push_back("s" + std::to_string(i));
  return m;
}

}  // namespace

TEST(Znorm, Examples) {
  EXPECT_EQ(znorm(std::vector<double>{5, 5, 5}), (Series{0, 0, 0}));
  auto z = znorm(std::vector<double>{1, 2, 3});
  EXPECT_NEAR(z[0], -1.2247, 1e-4);
  EXPECT_NEAR(z[1], 0.0, 1e-12);
  EXPECT_NEAR(z[2], 1.2247, 1e-4);
}

TEST(Sbd, IdentityIsZero) {
  auto x = sinusoid(30, 0.3);
  auto r = sbd(x, x);
  EXPECT_EQ(r.distance, 0.0);
  EXPECT_EQ(r.shift, 0);
}

TEST(Sbd, ImpulseExample) {
  std::vector<double> x{0, 1, 0}, y{0, 0, 1};
  auto r = sbd(x, y);
  EXPECT_NEAR(r.distance, 1.0 / 6.0, 1e-3);
  EXPECT_NEAR(r.distance, oracle::brute_sbd(x, y), 1e-12);
  EXPECT_EQ(r.shift, -1);
  auto zy = znorm(y);
  EXPECT_NEAR(r.aligned[1], zy[2], 1e-12);
}

TEST(Sbd, LengthMismatchThrows) {
  std::vector<double> a{1, 2, 3}, b{1, 2};
  EXPECT_THROW(sbd(a, b), std::invalid_argument);
}

TEST(Sbd, MatchesBruteForce) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 2 + static_cast<std::size_t>(trial % 40);
    std::vector<double> x(len), y(len);
    for (auto& v : x) v = nd(gen);
    for (auto& v : y) v = nd(gen);
    const double d = sbd(x, y).distance;
    EXPECT_NEAR(d, oracle::brute_sbd(x, y), 1e-9);
    EXPECT_NEAR(d, sbd(y, x).distance, 1e-12);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0);
  }
}

// Circular shifts of a short-period sinusoid: the best lag is never more than
// half a period away, so little overlap is lost to zero padding.
TEST(Sbd, ShiftQuasiInvariance) {
  const std::size_t L = 96;
  Series x(L);
  for (std::size_t t = 0; t < L; ++t) x[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 8.0);
  x = znorm(x);
  for (std::size_t s = 1; s <= L / 4; ++s) {
    Series y(L);
    for (std::size_t t = 0; t < L; ++t) y[t] = x[(t + L - s) % L];
    EXPECT_LE(sbd(x, y).distance, 0.05) << "shift " << s;
    EXPECT_NEAR(sbd(x, y).distance, oracle::brute_sbd(x, y), 1e-9);
  }
}

TEST(ShapeExtract, SingleMember) {
  std::vector<Series> members{{3, 1, 4, 1, 5, 9, 2, 6}};
  auto c = shape_extract(members, std::vector<double>(8, 0.0));
  auto z = znorm(members[0]);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(c[i], z[i], 1e-6);
}

TEST(ShapeExtract, TwoIdenticalMembers) {
  Series m{1, 3, 2, 5, 4, 4, 0};
  std::vector<Series> members{m, m};
  auto c = shape_extract(members, znorm(m));
  auto z = znorm(m);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(c[i], z[i], 1e-6);
}

TEST(ShapeExtract, NoisyShiftedSinusoids) {
  const std::size_t L = 72;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> shift(-4.0, 4.0);
  std::normal_distribution<double> noise(0.0, 0.15);
  std::vector<Series> members;
  for (int i = 0; i < 20; ++i) {
    auto s = sinusoid(L, shift(gen));
    for (auto& v : s) v += noise(gen);
    members.push_back(s);
  }
  auto clean = sinusoid(L, 0.0);
  auto c = shape_extract(members, members[0]);
  EXPECT_LT(oracle::brute_sbd(c, clean), 0.05);
  EXPECT_LT(sbd(c, clean).distance, 0.05);
}

TEST(KShape, SingleCluster) {
  std::vector<Series> rows;
  for (int i = 0; i < 6; ++i) rows.push_back(sinusoid(32, i * 0.5));
  auto m = matrix_of(rows);
  auto model = kshape_fit(m, 1, 3);
  for (auto l : model.labels) EXPECT_EQ(l, 0u);
  ASSERT_EQ(model.centroids.size(), 1u);
  auto expected = shape_extract(rows, std::vector<double>(32, 0.0));
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(model.centroids[0][i], expected[i], 1e-9);
}

TEST(KShape, TooFewRowsThrows) {
  auto m = matrix_of({sinusoid(10, 0)});
  EXPECT_THROW(kshape_fit(m, 2, 0), std::invalid_argument);
}

TEST(KShape, SineVersusSquare) {
  auto f = oracle::sine_square_fixture(30, 64, 99);
  auto m = matrix_of(f.rows);
  auto model = kshape_fit(m, 2, 42);
  EXPECT_GE(oracle::rand_index(model.labels, f.truth), 0.95);
  for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
    EXPECT_LE(model.inertia_history[i], model.inertia_history[i - 1]);
  }
  auto sizes = model.cluster_sizes();
  for (auto s : sizes) EXPECT_GT(s, 0u);
}

TEST(KShape, InertiaMonotoneAcrossSeeds) {
  auto f = oracle::sine_square_fixture(15, 40, 5);
  auto m = matrix_of(f.rows);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t k : {2u, 3u, 4u}) {
      auto model = kshape_fit(m, k, seed);
      for (std::size_t i = 1; i < model.inertia_history.size(); ++i) {
        EXPECT_LE(model.inertia_history[i], model.inertia_history[i - 1]);
      }
      EXPECT_GE(model.inertia, 0.0);
      for (auto s : model.cluster_sizes()) EXPECT_GT(s, 0u);
    }
  }
}

TEST(KShape, Deterministic) {
  auto f = oracle::sine_square_fixture(10, 32, 8);
  auto m = matrix_of(f.rows);
  auto a = kshape_fit(m, 3, 17);
  auto b = kshape_fit(m, 3, 17);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KShape, JsonRoundTrip) {
  auto f = oracle::sine_square_fixture(5, 16, 1);
  auto model = kshape_fit(matrix_of(f.rows), 2, 4);
  auto back = kshape_model_from_json(to_json(model));
  EXPECT_EQ(back.labels, model.labels);
  EXPECT_EQ(back.centroids, model.centroids);
  EXPECT_EQ(back.keys, model.keys);
  EXPECT_EQ(back.inertia, model.inertia);
  EXPECT_EQ(back.inertia_history, model.inertia_history);
}
