#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace loyalty {

using FeatureMatrix = std::vector<std::vector<double>>;

// Per-column z-scoring. Columns that are constant across rows are dropped.
struct Standardizer {
  std::size_t input_dim = 0;
  std::vector<std::size_t> kept_columns;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& rows);
  std::vector<double> apply(std::span<const double> row) const;
  FeatureMatrix apply(const FeatureMatrix& rows) const;
};

struct KMeansModel {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  Standardizer standardizer;
  std::vector<std::vector<double>> centroids;  // in standardized space
  std::vector<std::size_t> labels;
  double inertia = 0.0;  // within-cluster sum of squared distances, standardized space
  std::vector<double> inertia_history;
  std::size_t iterations_run = 0;
};

// Standardizes the columns, seeds with k-means++ and runs Lloyd iterations
// until the assignment is a fixed point or max_iter is reached. An empty
// cluster is reseeded with the point farthest from its centroid.
// Throws std::invalid_argument when k == 0, n < k or rows differ in width.
KMeansModel kmeans_fit(const FeatureMatrix& vectors, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300);

struct ElbowResult {
  std::size_t k = 1;
  std::vector<double> inertia;  // inertia[i] belongs to k = i + 1
};

// Fits k = 1..k_max (k_max capped at n). Each k keeps the better of a
// k-means++ fit and a fit warm-started from the k - 1 solution plus the
// farthest point, which keeps the curve non-increasing.
ElbowResult elbow_sweep(const FeatureMatrix& vectors, std::size_t k_max, std::uint64_t seed);

// The k whose (k, inertia) point lies farthest from the chord joining the
// curve's endpoints, inertia rescaled to [0, 1]. Distances within 1e-12 tie
// and ties go to the smaller k.
std::size_t elbow_choice(std::span<const double> inertia_curve);

// Requires n >= 2.
std::size_t elbow_select(const FeatureMatrix& vectors, std::size_t k_max, std::uint64_t seed);

nlohmann::json to_json(const KMeansModel& model, std::span<const std::string> keys);

}  // namespace loyalty
