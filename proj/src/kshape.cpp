#include "loyalty/kshape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "loyalty/errors.hpp"
#include "loyalty/parallel.hpp"
#include "loyalty/random.hpp"

namespace loyalty {

namespace {

constexpr std::size_t kMaxPowerIterations = 5000;
constexpr double kPowerTolerance = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

bool all_zero(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

struct Alignment {
  double distance;
  int shift;
};

// SBD on inputs that are already z-normalized.
Alignment sbd_normalized(std::span<const double> x, std::span<const double> y) {
  const double denom = std::sqrt(dot(x, x) * dot(y, y));
  if (denom == 0.0) return {1.0, 0};
  const int L = static_cast<int>(x.size());
  auto cross = [&](int s) {
    double sum = 0.0;
    const int lo = std::max(0, s);
    const int hi = std::min(L, L + s);
    for (int i = lo; i < hi; ++i) sum += x[i] * y[i - s];
    return sum;
  };
  double best = cross(0);
  int best_shift = 0;
  for (int m = 1; m < L; ++m) {
    for (int s : {-m, m}) {
      const double value = cross(s);
      if (value > best) {
        best = value;
        best_shift = s;
      }
    }
  }
  const double distance = std::clamp(1.0 - best / denom, 0.0, 2.0);
  return {distance, best_shift};
}

Series shifted(std::span<const double> y, int shift) {
  const int L = static_cast<int>(y.size());
  Series out(y.size(), 0.0);
  for (int i = std::max(0, shift); i < std::min(L, L + shift); ++i) out[i] = y[i - shift];
  return out;
}

void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("sbd: length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw std::invalid_argument("sbd: series length must be at least 2");
}

// Members and reference are z-normalized.
Series extract_normalized(const std::vector<const Series*>& members, std::span<const double> reference) {
  const std::size_t L = reference.size();
  const bool align = !all_zero(reference);
  std::vector<Series> aligned;
  aligned.reserve(members.size());
  for (const Series* member : members) {
    if (align) {
      const auto a = sbd_normalized(reference, *member);
      aligned.push_back(znorm(shifted(*member, a.shift)));
    } else {
      aligned.push_back(*member);
    }
  }

  std::vector<double> S(L * L, 0.0);
  for (const auto& a : aligned) {
    for (std::size_t i = 0; i < L; ++i) {
      if (a[i] == 0.0) continue;
      for (std::size_t j = 0; j < L; ++j) S[i * L + j] += a[i] * a[j];
    }
  }
  // M = Q S Q: subtract row and column means, add back the grand mean.
  std::vector<double> row_mean(L, 0.0), col_mean(L, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      row_mean[i] += S[i * L + j];
      col_mean[j] += S[i * L + j];
    }
  }
  for (std::size_t i = 0; i < L; ++i) {
    grand += row_mean[i];
    row_mean[i] /= static_cast<double>(L);
    col_mean[i] /= static_cast<double>(L);
  }
  grand /= static_cast<double>(L * L);
  std::vector<double> M(L * L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) M[i * L + j] = S[i * L + j] - row_mean[i] - col_mean[j] + grand;
  }

  // Start from the reference nudged by a centered ramp so the start vector is
  // never orthogonal to the whole dominant eigenspace by construction.
  Series v(L);
  for (std::size_t i = 0; i < L; ++i) {
    const double ramp = (static_cast<double>(i) - 0.5 * static_cast<double>(L - 1)) / static_cast<double>(L);
    v[i] = (align ? reference[i] : 0.0) + 1e-3 * ramp;
  }
  if (!align && !aligned.empty()) {
    for (std::size_t i = 0; i < L; ++i) v[i] += aligned.front()[i];
  }
  Series next(L);
  for (std::size_t iter = 0; iter < kMaxPowerIterations; ++iter) {
    for (std::size_t i = 0; i < L; ++i) next[i] = dot(std::span<const double>(M.data() + i * L, L), v);
    const double norm = std::sqrt(dot(next, next));
    if (norm == 0.0) return Series(L, 0.0);
    double change = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      next[i] /= norm;
      change = std::max(change, std::abs(next[i] - v[i]));
    }
    std::swap(v, next);
    if (change < kPowerTolerance) break;
  }

  Series centroid = znorm(v);
  double plus = 0.0, minus = 0.0;
  for (const auto& a : aligned) {
    for (std::size_t i = 0; i < L; ++i) {
      plus += (centroid[i] - a[i]) * (centroid[i] - a[i]);
      minus += (centroid[i] + a[i]) * (centroid[i] + a[i]);
    }
  }
  if (minus < plus) {
    for (double& c : centroid) c = -c;
  }
  return centroid;
}

}  // namespace

Series znorm(std::span<const double> series) {
  const double n = static_cast<double>(series.size());
  Series out(series.begin(), series.end());
  if (series.empty()) return out;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / n;
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd == 0.0 || !std::isfinite(sd) || sd < 1e-12 * std::max(1.0, std::abs(mean))) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& v : out) v = (v - mean) / sd;
  return out;
}

SbdResult sbd(std::span<const double> x, std::span<const double> y) {
  check_lengths(x, y);
  const Series xz = znorm(x);
  const Series yz = znorm(y);
  const auto a = sbd_normalized(xz, yz);
  return {a.distance, a.shift, shifted(yz, a.shift)};
}

Series shape_extract(std::span<const Series> members, std::span<const double> reference) {
  if (members.empty()) throw std::invalid_argument("shape_extract: at least one member required");
  std::vector<Series> normalized;
  normalized.reserve(members.size());
  for (const auto& m : members) {
    if (m.size() != reference.size()) throw std::invalid_argument("shape_extract: length mismatch");
    normalized.push_back(znorm(m));
  }
  std::vector<const Series*> pointers;
  for (const auto& m : normalized) pointers.push_back(&m);
  return extract_normalized(pointers, znorm(reference));
}

std::vector<std::size_t> KShapeModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (auto label : labels) ++sizes[label];
  return sizes;
}

KShapeModel kshape_fit(const SeriesMatrix& data, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = data.size();
  if (k == 0) throw std::invalid_argument("kshape: k must be at least 1");
  if (n < k) {
    throw std::invalid_argument("kshape: " + std::to_string(n) + " series cannot form " + std::to_string(k) +
                                " clusters");
  }
  const std::size_t L = data.length();
  if (L < 2) throw std::invalid_argument("kshape: series length must be at least 2");
  std::vector<Series> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (data.rows[i].size() != L) throw std::invalid_argument("kshape: rows differ in length");
    z[i] = znorm(data.rows[i]);
  }
  std::vector<bool> constant(n);
  for (std::size_t i = 0; i < n; ++i) constant[i] = all_zero(z[i]);

  KShapeModel model;
  model.k = k;
  model.seed = seed;
  model.keys = data.keys;
  model.centroids.assign(k, Series(L, 0.0));
  model.labels.resize(n);
  Rng rng(seed);
  for (auto& label : model.labels) label = rng.uniform_index(k);

  std::vector<double> own_distance(n, 1.0);
  std::vector<std::size_t> next_labels(n);
  std::vector<double> next_distance(n);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[model.labels[i]].push_back(i);

    parallel_for(k, [&](std::size_t j) {
      if (members[j].empty()) return;
      std::vector<const Series*> rows;
      rows.reserve(members[j].size());
      for (auto i : members[j]) rows.push_back(&z[i]);
      Series candidate = extract_normalized(rows, model.centroids[j]);
      if (iter > 0) {
        double old_cost = 0.0, new_cost = 0.0;
        for (auto i : members[j]) {
          old_cost += own_distance[i];
          new_cost += sbd_normalized(candidate, z[i]).distance;
        }
        if (new_cost > old_cost) return;
      }
      model.centroids[j] = std::move(candidate);
    });

    parallel_for(n, [&](std::size_t i) {
      std::size_t best = 0;
      double best_distance = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        const double d = sbd_normalized(model.centroids[j], z[i]).distance;
        if (d < best_distance) {
          best_distance = d;
          best = j;
        }
      }
      next_labels[i] = best;
      next_distance[i] = best_distance;
    });

    std::vector<std::size_t> sizes(k, 0);
    for (auto label : next_labels) ++sizes[label];
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] > 0) continue;
      std::size_t pick = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (constant[i] || sizes[next_labels[i]] < 2) continue;
        if (pick == n || next_distance[i] > next_distance[pick]) pick = i;
      }
      if (pick == n) throw DataError("kshape: too few non-constant series to fill " + std::to_string(k) + " clusters");
      --sizes[next_labels[pick]];
      ++sizes[j];
      next_labels[pick] = j;
      next_distance[pick] = 0.0;
      model.centroids[j] = z[pick];
    }

    const bool changed = next_labels != model.labels;
    model.labels = next_labels;
    own_distance = next_distance;
    model.inertia = std::accumulate(own_distance.begin(), own_distance.end(), 0.0);
    model.inertia_history.push_back(model.inertia);
    model.iterations_run = iter + 1;
    if (!changed) break;
  }
  return model;
}

nlohmann::json to_json(const KShapeModel& model) {
  nlohmann::json labels = nlohmann::json::object();
  for (std::size_t i = 0; i < model.labels.size(); ++i) labels[model.keys[i]] = model.labels[i];
  return {{"k", model.k},
          {"seed", model.seed},
          {"centroids", model.centroids},
          {"labels", labels},
          {"inertia", model.inertia},
          {"iterations_run", model.iterations_run},
          {"inertia_history", model.inertia_history}};
}

KShapeModel kshape_model_from_json(const nlohmann::json& doc) {
  KShapeModel model;
  model.k = doc.at("k").get<std::size_t>();
  model.seed = doc.at("seed").get<std::uint64_t>();
  model.centroids = doc.at("centroids").get<std::vector<Series>>();
  model.inertia = doc.at("inertia").get<double>();
  model.iterations_run = doc.value("iterations_run", std::size_t{0});
  model.inertia_history = doc.value("inertia_history", std::vector<double>{});
  for (const auto& [key, label] : doc.at("labels").items()) {
    model.keys.push_back(key);
    model.labels.push_back(label.get<std::size_t>());
  }
  if (model.centroids.size() != model.k) throw DataError("kshape model: centroid count differs from k");
  for (auto label : model.labels) {
    if (label >= model.k) throw DataError("kshape model: label out of range");
  }
  return model;
}

}  // namespace loyalty
