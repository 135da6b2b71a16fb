#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "loyalty/tda.hpp"
#include "oracles.hpp"

using namespace loyalty;

namespace {

PointCloud random_cloud(std::mt19937_64& gen, std::size_t m, std::size_t dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> coords(m * dim);
  for (auto& c : coords) c = u(gen);
  return PointCloud(dim, coords);
}

std::vector<oracle::Vec> points_of(const PointCloud& cloud) {
  std::vector<oracle::Vec> pts;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    pts.emplace_back(p.begin(), p.end());
  }
  return pts;
}

PointCloud unit_square() { return PointCloud(2, {0, 0, 1, 0, 1, 1, 0, 1}); }

}  // namespace

TEST(DelayEmbed, Examples) {
  auto a = delay_embed(std::vector<double>{1, 2, 3, 4}, 2, 1);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a.point(0)[0], 1);
  EXPECT_EQ(a.point(0)[1], 2);
  EXPECT_EQ(a.point(2)[0], 3);
  EXPECT_EQ(a.point(2)[1], 4);
  auto b = delay_embed(std::vector<double>{1, 2, 3, 4, 5}, 3, 2);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(std::vector<double>(b.point(0).begin(), b.point(0).end()), (std::vector<double>{1, 3, 5}));
  auto c = delay_embed(std::vector<double>(6, 2.5), 3, 1);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(c.distance(0, i), 0.0);
}

TEST(DelayEmbed, TooShortNamesMinimum) {
  try {
    delay_embed(std::vector<double>{1, 2, 3, 4}, 3, 2);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find('5'), std::string::npos);
  }
}

TEST(Rips, EquilateralTriangle) {
  const double h = std::sqrt(3.0) / 2.0;
  PointCloud cloud(2, {0, 0, 1, 0, 0.5, h});
  auto cx = rips_filtration(cloud);
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& s : cx.simplices) {
    ++counts[s.dim];
    if (s.dim == 0) EXPECT_EQ(s.value, 0.0);
    else EXPECT_NEAR(s.value, 1.0, 1e-12);
  }
  EXPECT_EQ(counts[0], 3u);
  EXPECT_EQ(counts[1], 3u);
  EXPECT_EQ(counts[2], 1u);
}

TEST(Rips, RadiusCutoff) {
  PointCloud cloud(1, {0, 5});
  auto cx = rips_filtration(cloud, 3.0);
  ASSERT_EQ(cx.simplices.size(), 2u);
  EXPECT_EQ(cx.simplices[0].dim, 0);
  EXPECT_EQ(cx.simplices[1].dim, 0);
}

TEST(Rips, UnitSquareEnumeration) {
  auto cx = rips_filtration(unit_square());
  std::size_t v = 0, e1 = 0, e2 = 0, t = 0;
  for (const auto& s : cx.simplices) {
    if (s.dim == 0) ++v;
    if (s.dim == 1 && std::abs(s.value - 1.0) < 1e-12) ++e1;
    if (s.dim == 1 && std::abs(s.value - std::sqrt(2.0)) < 1e-12) ++e2;
    if (s.dim == 2) {
      ++t;
      EXPECT_NEAR(s.value, std::sqrt(2.0), 1e-12);
    }
  }
  EXPECT_EQ(v, 4u);
  EXPECT_EQ(e1, 4u);
  EXPECT_EQ(e2, 2u);
  EXPECT_EQ(t, 4u);
  EXPECT_EQ(cx.simplices.size(), 14u);
}

TEST(Rips, FiltrationOrderAndFacesFirst) {
  std::mt19937_64 gen(3);
  auto cloud = random_cloud(gen, 12, 3);
  auto cx = rips_filtration(cloud);
  for (std::size_t i = 1; i < cx.simplices.size(); ++i) {
    EXPECT_TRUE(cx.simplices[i - 1] < cx.simplices[i]);
  }
  auto bm = BoundaryMatrix::from_complex(cx);
  for (std::size_t j = 0; j < bm.columns.size(); ++j) {
    EXPECT_EQ(bm.columns[j].size(), cx.simplices[j].dim == 0 ? 0u : cx.simplices[j].dim + 1u);
    for (auto idx : bm.columns[j]) EXPECT_LT(idx, j);
  }
}

TEST(Persistence, SinglePoint) {
  auto b = persistence(rips_filtration(PointCloud(2, {1, 1})));
  ASSERT_EQ(b.dim(0).size(), 1u);
  EXPECT_EQ(b.dim(0)[0].birth, 0.0);
  EXPECT_TRUE(b.dim(0)[0].infinite());
  EXPECT_TRUE(b.dim(1).empty());
}

TEST(Persistence, CollinearPoints) {
  PointCloud cloud(1, {0, 1, 3});
  auto b = persistence(rips_filtration(cloud));
  auto mst = oracle::prim_mst_lengths(points_of(cloud));
  ASSERT_EQ(b.dim(0).size(), 3u);
  std::vector<double> finite;
  std::size_t infinite = 0;
  for (const auto& iv : b.dim(0)) {
    if (iv.infinite()) ++infinite;
    else finite.push_back(iv.death);
  }
  std::sort(finite.begin(), finite.end());
  EXPECT_EQ(infinite, 1u);
  EXPECT_EQ(finite, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(finite, mst);
}

TEST(Persistence, UnitSquareLoop) {
  auto b = persistence(rips_filtration(unit_square()));
  ASSERT_EQ(b.dim(1).size(), 1u);
  EXPECT_NEAR(b.dim(1)[0].birth, 1.0, 1e-9);
  EXPECT_NEAR(b.dim(1)[0].death, std::sqrt(2.0), 1e-9);
  EXPECT_EQ(rips_barcode(unit_square()), b);
}

TEST(Persistence, MatchesH0OracleAndMst) {
  std::mt19937_64 gen(20240601);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + trial % 30;
    const std::size_t dim = 2 + trial % 3;
    auto cloud = random_cloud(gen, m, dim);
    auto full = persistence(rips_filtration(cloud));
    auto h0 = h0_oracle(cloud);
    EXPECT_EQ(full.dim(0), h0.dim(0));
    std::vector<double> deaths;
    for (const auto& iv : full.dim(0)) {
      if (!iv.infinite()) deaths.push_back(iv.death);
    }
    std::sort(deaths.begin(), deaths.end());
    EXPECT_EQ(deaths, oracle::prim_mst_lengths(points_of(cloud)));
    EXPECT_EQ(rips_barcode(cloud), full) << "trial " << trial;
  }
}

TEST(Persistence, FastPathMatchesWithRadius) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 40; ++trial) {
    auto cloud = random_cloud(gen, 25, 2);
    const double r = 0.1 + 0.02 * trial;
    EXPECT_EQ(rips_barcode(cloud, r), persistence(rips_filtration(cloud, r)));
    EXPECT_EQ(h0_oracle(cloud, r).dim(0), persistence(rips_filtration(cloud, r)).dim(0));
  }
}

TEST(Persistence, IdenticalPoints) {
  PointCloud cloud(2, std::vector<double>(10, 0.25));
  auto b = persistence(rips_filtration(cloud));
  ASSERT_EQ(b.dim(0).size(), 1u);
  EXPECT_TRUE(b.dim(0)[0].infinite());
  EXPECT_EQ(h0_oracle(cloud), b);
}

TEST(Persistence, ClustersBeyondRadius) {
  PointCloud cloud(1, {0, 0.1, 0.2, 10, 10.1});
  auto b = h0_oracle(cloud, 1.0);
  std::size_t infinite = 0;
  for (const auto& iv : b.dim(0)) infinite += iv.infinite() ? 1 : 0;
  EXPECT_EQ(infinite, 2u);
}

TEST(Persistence, BarsCountSurvivingComponents) {
  std::mt19937_64 gen(4242);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    auto cloud = random_cloud(gen, 5 + trial % 20, 2 + trial % 2);
    const double diam = cloud.diameter();
    double a = u(gen) * diam, b = u(gen) * diam;
    if (a > b) std::swap(a, b);
    auto bars = persistence(rips_filtration(cloud));
    std::size_t spanning = 0;
    for (const auto& iv : bars.dim(0)) spanning += (iv.birth <= a && iv.death > b) ? 1 : 0;
    EXPECT_EQ(spanning, oracle::surviving_components(points_of(cloud), a, b));
  }
}

TEST(Persistence, ScaleEquivariance) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto cloud = random_cloud(gen, 15, 3);
    auto pts = points_of(cloud);
    std::vector<double> scaled;
    for (const auto& p : pts) {
      for (double v : p) scaled.push_back(2.0 * v);
    }
    auto a = persistence(rips_filtration(cloud));
    auto b = persistence(rips_filtration(PointCloud(3, scaled)));
    for (int k = 0; k < 2; ++k) {
      ASSERT_EQ(a.dim(k).size(), b.dim(k).size());
      for (std::size_t i = 0; i < a.dim(k).size(); ++i) {
        EXPECT_NEAR(b.dim(k)[i].birth, 2.0 * a.dim(k)[i].birth, 1e-9);
        if (a.dim(k)[i].infinite()) EXPECT_TRUE(b.dim(k)[i].infinite());
        else EXPECT_NEAR(b.dim(k)[i].death, 2.0 * a.dim(k)[i].death, 1e-9);
      }
    }
  }
}

TEST(Persistence, PermutationInvariance) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto cloud = random_cloud(gen, 14, 2);
    auto pts = points_of(cloud);
    std::shuffle(pts.begin(), pts.end(), gen);
    std::vector<double> coords;
    for (const auto& p : pts) coords.insert(coords.end(), p.begin(), p.end());
    EXPECT_EQ(persistence(rips_filtration(PointCloud(2, coords))), persistence(rips_filtration(cloud)));
  }
}

TEST(Persistence, DiagramAboveDiagonal) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto d = to_diagram(persistence(rips_filtration(random_cloud(gen, 20, 3))));
    for (const auto& dim : d.points) {
      for (const auto& p : dim) EXPECT_GT(p[1], p[0]);
    }
  }
}

TEST(Features, EmptyBarcode) {
  auto f = barcode_features(Barcode{}, 1.0);
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(Features, TwoBars) {
  Barcode b;
  b.bars[0] = {{0, 1}, {0, 2}};
  auto f = barcode_features(b, 2.0);
  EXPECT_EQ(f[0], 2.0);                // count
  EXPECT_EQ(f[1], 2.0);                // max
  EXPECT_EQ(f[2], 3.0);                // total
  EXPECT_EQ(f[3], 1.5);                // mean persistence
  EXPECT_NEAR(f[4], 0.5, 1e-12);       // population stddev
  EXPECT_EQ(f[5], 0.0);                // mean birth
  EXPECT_EQ(f[6], 1.5);                // mean death
  EXPECT_NEAR(f[7], 0.6365, 1e-3);     // entropy
  const double p1 = 1.0 / 3.0, p2 = 2.0 / 3.0;
  EXPECT_NEAR(f[7], -(p1 * std::log(p1) + p2 * std::log(p2)), 1e-12);
  for (std::size_t i = kFeaturesPerDim; i < f.size(); ++i) EXPECT_EQ(f[i], 0.0);
}

TEST(Features, SingleBarAndCap) {
  Barcode b;
  b.bars[0] = {{0, std::numeric_limits<double>::infinity()}};
  auto f = barcode_features(b, 4.0);
  EXPECT_EQ(f[7], 0.0);
  EXPECT_EQ(f[1], 4.0);
  for (double v : f) EXPECT_TRUE(std::isfinite(v));
  Barcode too_long;
  too_long.bars[1] = {{0.5, 5.0}};
  EXPECT_THROW(barcode_features(too_long, 4.0), std::invalid_argument);
  EXPECT_EQ(topo_feature_names().size(), 2 * kFeaturesPerDim);
}

TEST(BarcodeCsv, Rows) {
  std::ostringstream out;
  write_barcode_csv_header(out);
  write_barcode_csv(out, "42", 'R', persistence(rips_filtration(unit_square())));
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("customer_id,component,dim,birth,death\n", 0), 0u);
  EXPECT_NE(s.find("42,R,0,0,inf"), std::string::npos);
  EXPECT_NE(s.find("42,R,1,1,1.414"), std::string::npos);
}
