#include "loyalty/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "loyalty/parallel.hpp"
#include "loyalty/random.hpp"

namespace loyalty {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
  return sum;
}

struct LloydResult {
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> labels;
  double inertia = 0.0;
  std::vector<double> history;
  std::size_t iterations = 0;
};

LloydResult lloyd(const FeatureMatrix& x, std::vector<std::vector<double>> centroids, std::size_t max_iter) {
  const std::size_t n = x.size();
  const std::size_t k = centroids.size();
  const std::size_t d = n == 0 ? 0 : x.front().size();
  LloydResult result;
  std::vector<std::size_t> labels(n), previous;
  std::vector<double> d2(n);
  for (std::size_t it = 0; it < std::max<std::size_t>(max_iter, 1); ++it) {
    parallel_for(n, [&](std::size_t i) {
      std::size_t best = 0;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double dist = squared_distance(x[i], centroids[j]);
        if (dist < best_d2) {
          best_d2 = dist;
          best = j;
        }
      }
      labels[i] = best;
      d2[i] = best_d2;
    });

    std::vector<std::size_t> sizes(k, 0);
    for (auto label : labels) ++sizes[label];
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] > 0) continue;
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] < 2) continue;
        if (pick == n || d2[i] > d2[pick]) pick = i;
      }
      --sizes[labels[pick]];
      ++sizes[j];
      labels[pick] = j;
      d2[pick] = 0.0;
      centroids[j] = x[pick];
    }

    double inertia = 0.0;
    for (double v : d2) inertia += v;
    result.history.push_back(inertia);
    result.iterations = it + 1;
    if (labels == previous) break;
    previous = labels;
    if (it + 1 == max_iter) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) sums[labels[i]][c] += x[i][c];
    }
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t c = 0; c < d; ++c) sums[j][c] /= static_cast<double>(sizes[j]);
    }
    centroids = std::move(sums);
  }
  result.centroids = std::move(centroids);
  result.labels = std::move(labels);
  result.inertia = result.history.back();
  return result;
}

std::vector<std::vector<double>> kmeans_plus_plus(const FeatureMatrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> centers;
  centers.push_back(x[rng.uniform_index(n)]);
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squared_distance(x[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double v : nearest) total += v;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double running = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (nearest[i] == 0.0) continue;
        running += nearest[i];
        pick = i;
        if (running > target) break;
      }
    } else {
      pick = rng.uniform_index(n);
    }
    centers.push_back(x[pick]);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], squared_distance(x[i], centers.back()));
  }
  return centers;
}

void validate(const FeatureMatrix& vectors, std::size_t k) {
  if (k == 0) throw std::invalid_argument("kmeans: k must be at least 1");
  if (vectors.size() < k) {
    throw std::invalid_argument("kmeans: " + std::to_string(vectors.size()) + " rows cannot form " +
                                std::to_string(k) + " clusters");
  }
  for (const auto& row : vectors) {
    if (row.size() != vectors.front().size()) throw std::invalid_argument("kmeans: rows differ in width");
  }
}

KMeansModel fit_standardized(const FeatureMatrix& x, Standardizer standardizer, std::size_t k, std::uint64_t seed,
                             std::size_t max_iter) {
  Rng rng(seed);
  auto result = lloyd(x, kmeans_plus_plus(x, k, rng), max_iter);
  KMeansModel model;
  model.k = k;
  model.seed = seed;
  model.standardizer = std::move(standardizer);
  model.centroids = std::move(result.centroids);
  model.labels = std::move(result.labels);
  model.inertia = result.inertia;
  model.inertia_history = std::move(result.history);
  model.iterations_run = result.iterations;
  return model;
}

}  // namespace

Standardizer Standardizer::fit(const FeatureMatrix& rows) {
  Standardizer s;
  s.input_dim = rows.empty() ? 0 : rows.front().size();
  const double n = static_cast<double>(rows.size());
  for (std::size_t c = 0; c < s.input_dim; ++c) {
    const bool constant =
        std::all_of(rows.begin(), rows.end(), [&](const auto& row) { return row[c] == rows.front()[c]; });
    if (constant) continue;
    double mean = 0.0;
    for (const auto& row : rows) mean += row[c];
    mean /= n;
    double var = 0.0;
    for (const auto& row : rows) var += (row[c] - mean) * (row[c] - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) continue;
    s.kept_columns.push_back(c);
    s.mean.push_back(mean);
    s.scale.push_back(sd);
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != input_dim) throw std::invalid_argument("standardizer: row width mismatch");
  std::vector<double> out(kept_columns.size());
  for (std::size_t i = 0; i < kept_columns.size(); ++i) out[i] = (row[kept_columns[i]] - mean[i]) / scale[i];
  return out;
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& rows) const {
  FeatureMatrix out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(apply(std::span<const double>(row)));
  return out;
}

KMeansModel kmeans_fit(const FeatureMatrix& vectors, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  validate(vectors, k);
  auto standardizer = Standardizer::fit(vectors);
  const auto x = standardizer.apply(vectors);
  return fit_standardized(x, std::move(standardizer), k, seed, max_iter);
}

ElbowResult elbow_sweep(const FeatureMatrix& vectors, std::size_t k_max, std::uint64_t seed) {
  if (vectors.size() < 2) throw std::invalid_argument("elbow: at least 2 rows required");
  validate(vectors, 1);
  k_max = std::clamp<std::size_t>(k_max, 1, vectors.size());
  auto standardizer = Standardizer::fit(vectors);
  const auto x = standardizer.apply(vectors);
  ElbowResult result;
  std::vector<std::vector<double>> previous;
  constexpr std::size_t kMaxIter = 300;
  for (std::size_t k = 1; k <= k_max; ++k) {
    auto fresh = fit_standardized(x, standardizer, k, seed, kMaxIter);
    double inertia = fresh.inertia;
    auto centroids = fresh.centroids;
    if (k > 1) {
      auto start = previous;
      std::size_t farthest = 0;
      double far_d2 = -1.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& c : previous) nearest = std::min(nearest, squared_distance(x[i], c));
        if (nearest > far_d2) {
          far_d2 = nearest;
          farthest = i;
        }
      }
      start.push_back(x[farthest]);
      auto warm = lloyd(x, std::move(start), kMaxIter);
      if (warm.inertia < inertia) {
        inertia = warm.inertia;
        centroids = std::move(warm.centroids);
      }
    }
    result.inertia.push_back(inertia);
    previous = std::move(centroids);
  }
  result.k = elbow_choice(result.inertia);
  return result;
}

std::size_t elbow_choice(std::span<const double> curve) {
  const std::size_t K = curve.size();
  if (K <= 2) return 1;
  const auto [lo_it, hi_it] = std::minmax_element(curve.begin(), curve.end());
  const double range = *hi_it - *lo_it;
  if (!(range > 0.0)) return 1;
  auto scaled = [&](std::size_t i) { return (curve[i] - *lo_it) / range; };
  const double dx = static_cast<double>(K - 1);
  const double dy = scaled(K - 1) - scaled(0);
  const double length = std::hypot(dx, dy);
  std::size_t best = 1;
  double best_distance = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double distance = std::abs(dy * static_cast<double>(i) - dx * (scaled(i) - scaled(0))) / length;
    if (distance > best_distance + 1e-12) {
      best_distance = distance;
      best = i + 1;
    }
  }
  return best;
}

std::size_t elbow_select(const FeatureMatrix& vectors, std::size_t k_max, std::uint64_t seed) {
  return elbow_sweep(vectors, k_max, seed).k;
}

nlohmann::json to_json(const KMeansModel& model, std::span<const std::string> keys) {
  nlohmann::json labels = nlohmann::json::object();
  for (std::size_t i = 0; i < model.labels.size() && i < keys.size(); ++i) labels[keys[i]] = model.labels[i];
  return {{"k", model.k},
          {"seed", model.seed},
          {"standardization",
           {{"input_dim", model.standardizer.input_dim},
            {"kept_columns", model.standardizer.kept_columns},
            {"mean", model.standardizer.mean},
            {"scale", model.standardizer.scale}}},
          {"centroids", model.centroids},
          {"labels", labels},
          {"inertia", model.inertia}};
}

}  // namespace loyalty
