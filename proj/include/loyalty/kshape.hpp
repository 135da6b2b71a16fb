#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace loyalty {

using Series = std::vector<double>;

// Mean 0, population standard deviation 1. A constant input maps to zeros.
Series znorm(std::span<const double> series);

struct SbdResult {
  double distance = 0.0;  // in [0, 2]
  int shift = 0;          // aligned[i] = znorm(y)[i - shift], zero outside the range
  Series aligned;
};

// Shape-based distance: 1 - max normalized cross-correlation of the
// z-normalized inputs over all shifts -(L-1)..(L-1). Equal maxima prefer the
// smallest |shift|, then the negative shift. Throws std::invalid_argument on a
// length mismatch or length < 2. A constant input is at distance 1 from anything.
SbdResult sbd(std::span<const double> x, std::span<const double> y);

// Equal-length series keyed by customer id.
struct SeriesMatrix {
  std::vector<Series> rows;
  std::vector<std::string> keys;

  std::size_t size() const { return rows.size(); }
  std::size_t length() const { return rows.empty() ? 0 : rows.front().size(); }
};

// Shape centroid of the members aligned to the reference: leading eigenvector
// of Q^T S Q by power iteration, where S sums the outer products of the
// aligned z-normalized members and Q = I - 11^T / L. The sign closest to the
// members is returned, z-normalized. An all-zero reference skips alignment.
Series shape_extract(std::span<const Series> members, std::span<const double> reference);

struct KShapeModel {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Series> centroids;
  std::vector<std::size_t> labels;
  std::vector<std::string> keys;
  double inertia = 0.0;  // sum of SBD from each row to its centroid
  std::size_t iterations_run = 0;
  std::vector<double> inertia_history;  // inertia after every iteration

  std::vector<std::size_t> cluster_sizes() const;
};

// Alternates refinement and SBD assignment from uniformly random initial
// labels until the labels stop changing or max_iter is reached. A refined
// centroid replaces the old one only if it does not raise its cluster's
// distance sum, so inertia never increases. Empty clusters are reseeded with
// the non-constant row farthest from its centroid. Throws std::invalid_argument
// when k == 0 or n < k.
KShapeModel kshape_fit(const SeriesMatrix& data, std::size_t k, std::uint64_t seed, std::size_t max_iter = 100);

nlohmann::json to_json(const KShapeModel& model);
KShapeModel kshape_model_from_json(const nlohmann::json& doc);

}  // namespace loyalty
