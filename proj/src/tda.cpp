#include "loyalty/tda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

#include "loyalty/csv.hpp"

namespace loyalty {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int32_t kNone = -1;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) x = std::exchange(parent_[x], root);
    return root;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct Edge {
  double value;
  std::uint32_t a;
  std::uint32_t b;

  auto operator<=>(const Edge&) const = default;
};

double resolve_radius(const PointCloud& cloud, std::optional<double> max_radius) {
  if (!max_radius) return cloud.diameter();
  if (!(*max_radius > 0.0)) throw std::invalid_argument("max_radius must be positive");
  return *max_radius;
}

// Edges within the radius, in filtration order.
std::vector<Edge> sorted_edges(const PointCloud& cloud, double radius) {
  std::vector<Edge> edges;
  const auto m = static_cast<std::uint32_t>(cloud.size());
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = i + 1; j < m; ++j) {
      const double d = cloud.distance(i, j);
      if (d <= radius) edges.push_back({d, i, j});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

// Symmetric difference of two ascending index lists.
template <typename Index>
void add_column(std::vector<Index>& target, const std::vector<Index>& source, std::vector<Index>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

void push_bar(Barcode& barcode, int dim, double birth, double death) {
  if (dim > 1 || !(death > birth)) return;
  barcode.bars[static_cast<std::size_t>(dim)].push_back({birth, death});
}

}  // namespace

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  if (dim_ == 0) throw std::invalid_argument("point cloud dimension must be positive");
  if (coords_.empty() || coords_.size() % dim_ != 0) {
    throw std::invalid_argument("point cloud needs at least one point of dimension " + std::to_string(dim_));
  }
}

double PointCloud::distance(std::size_t i, std::size_t j) const {
  const auto p = point(i);
  const auto q = point(j);
  double sum = 0.0;
  for (std::size_t c = 0; c < dim_; ++c) sum += (p[c] - q[c]) * (p[c] - q[c]);
  return std::sqrt(sum);
}

double PointCloud::diameter() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) best = std::max(best, distance(i, j));
  }
  return best;
}

PointCloud delay_embed(std::span<const double> series, std::size_t dim, std::size_t delay) {
  if (dim < 2) throw std::invalid_argument("embedding dimension must be at least 2");
  if (delay < 1) throw std::invalid_argument("delay must be at least 1");
  const std::size_t span = (dim - 1) * delay;
  if (series.size() < span + 1) {
    throw std::invalid_argument("series of length " + std::to_string(series.size()) +
                                " too short for the embedding; minimum length is " + std::to_string(span + 1));
  }
  const std::size_t m = series.size() - span;
  std::vector<double> coords;
  coords.reserve(m * dim);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t c = 0; c < dim; ++c) coords.push_back(series[i + c * delay]);
  }
  return PointCloud(dim, std::move(coords));
}

FilteredComplex rips_filtration(const PointCloud& cloud, std::optional<double> max_radius, int max_dim) {
  if (max_dim < 0 || max_dim > 2) throw std::invalid_argument("max_dim must be 0, 1 or 2");
  FilteredComplex complex;
  complex.max_radius = resolve_radius(cloud, max_radius);
  const auto m = static_cast<std::uint32_t>(cloud.size());
  for (std::uint32_t i = 0; i < m; ++i) complex.simplices.push_back({{i, 0, 0}, 0, 0.0});
  if (max_dim >= 1) {
    std::vector<double> dist(static_cast<std::size_t>(m) * m, kInf);
    for (const auto& e : sorted_edges(cloud, complex.max_radius)) {
      complex.simplices.push_back({{e.a, e.b, 0}, 1, e.value});
      dist[e.a * m + e.b] = e.value;
    }
    if (max_dim >= 2) {
      for (std::uint32_t i = 0; i < m; ++i) {
        for (std::uint32_t j = i + 1; j < m; ++j) {
          const double ij = dist[i * m + j];
          if (ij == kInf) continue;
          for (std::uint32_t k = j + 1; k < m; ++k) {
            const double ik = dist[i * m + k];
            const double jk = dist[j * m + k];
            if (ik == kInf || jk == kInf) continue;
            complex.simplices.push_back({{i, j, k}, 2, std::max({ij, ik, jk})});
          }
        }
      }
    }
  }
  std::sort(complex.simplices.begin(), complex.simplices.end());
  return complex;
}

BoundaryMatrix BoundaryMatrix::from_complex(const FilteredComplex& complex) {
  std::uint32_t m = 0;
  for (const auto& s : complex.simplices) {
    if (s.dim == 0) m = std::max(m, s.vertices[0] + 1);
  }
  std::vector<std::uint32_t> vertex_index(m);
  std::vector<std::int64_t> edge_index(static_cast<std::size_t>(m) * m, kNone);
  BoundaryMatrix matrix;
  matrix.columns.resize(complex.simplices.size());
  for (std::uint32_t idx = 0; idx < complex.simplices.size(); ++idx) {
    const auto& s = complex.simplices[idx];
    const auto& v = s.vertices;
    auto& column = matrix.columns[idx];
    if (s.dim == 0) {
      vertex_index[v[0]] = idx;
    } else if (s.dim == 1) {
      edge_index[v[0] * m + v[1]] = idx;
      column = {vertex_index[v[0]], vertex_index[v[1]]};
    } else {
      for (auto [a, b] : {std::pair{v[0], v[1]}, std::pair{v[0], v[2]}, std::pair{v[1], v[2]}}) {
        const auto face = edge_index[a * m + b];
        if (face == kNone) throw std::logic_error("triangle listed before one of its edges");
        column.push_back(static_cast<std::uint32_t>(face));
      }
    }
    std::sort(column.begin(), column.end());
  }
  return matrix;
}

void Barcode::canonicalize() {
  for (auto& dim_bars : bars) std::sort(dim_bars.begin(), dim_bars.end());
}

PersistenceDiagram to_diagram(const Barcode& barcode) {
  PersistenceDiagram diagram;
  for (std::size_t k = 0; k < 2; ++k) {
    for (const auto& bar : barcode.bars[k]) diagram.points[k].push_back({bar.birth, bar.death});
  }
  return diagram;
}

Barcode persistence(const FilteredComplex& complex) {
  auto matrix = BoundaryMatrix::from_complex(complex);
  const std::size_t n = matrix.columns.size();
  std::vector<std::int64_t> pivot_owner(n, kNone);
  std::vector<bool> paired(n, false);
  std::vector<std::uint32_t> scratch;
  Barcode barcode;
  for (std::size_t j = 0; j < n; ++j) {
    auto& column = matrix.columns[j];
    while (!column.empty() && pivot_owner[column.back()] != kNone) {
      add_column(column, matrix.columns[static_cast<std::size_t>(pivot_owner[column.back()])], scratch);
    }
    if (column.empty()) continue;
    const std::uint32_t low = column.back();
    pivot_owner[low] = static_cast<std::int64_t>(j);
    paired[low] = paired[j] = true;
    const auto& born = complex.simplices[low];
    push_bar(barcode, born.dim, born.value, complex.simplices[j].value);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!paired[j]) push_bar(barcode, complex.simplices[j].dim, complex.simplices[j].value, kInf);
  }
  barcode.canonicalize();
  return barcode;
}

Barcode h0_oracle(const PointCloud& cloud, std::optional<double> max_radius) {
  const double radius = resolve_radius(cloud, max_radius);
  DisjointSets sets(cloud.size());
  std::size_t components = cloud.size();
  Barcode barcode;
  for (const auto& e : sorted_edges(cloud, radius)) {
    if (!sets.unite(e.a, e.b)) continue;
    --components;
    push_bar(barcode, 0, 0.0, e.value);
  }
  for (std::size_t c = 0; c < components; ++c) push_bar(barcode, 0, 0.0, kInf);
  barcode.canonicalize();
  return barcode;
}

Barcode rips_barcode(const PointCloud& cloud, std::optional<double> max_radius) {
  const double radius = resolve_radius(cloud, max_radius);
  const std::size_t m = cloud.size();
  const auto edges = sorted_edges(cloud, radius);

  Barcode barcode;
  DisjointSets sets(m);
  std::size_t components = m;
  std::vector<bool> merges(edges.size(), false);
  std::vector<std::int64_t> edge_rank(m * m, kNone);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edge_rank[edges[e].a * m + edges[e].b] = static_cast<std::int64_t>(e);
    if (sets.unite(edges[e].a, edges[e].b)) {
      merges[e] = true;
      --components;
      push_bar(barcode, 0, 0.0, edges[e].value);
    }
  }
  for (std::size_t c = 0; c < components; ++c) push_bar(barcode, 0, 0.0, kInf);

  auto rank_of = [&](std::size_t a, std::size_t b) {
    return a < b ? edge_rank[a * m + b] : edge_rank[b * m + a];
  };

  // A triangle is keyed by (rank of its longest edge, opposite vertex). Sorting
  // by this key refines the filtration order and leaves the pairs' values
  // unchanged, so triangles never need to be enumerated or sorted up front.
  const std::uint64_t mm = m;
  auto death_of = [&](std::uint64_t key) { return edges[key / mm].value; };

  // Coboundary columns of edges in reverse filtration order; the pivot of a
  // column is its earliest triangle. Merging edges are cleared: they are paired
  // with vertices and their columns would reduce to zero.
  std::vector<std::vector<std::uint64_t>> reduced(edges.size());
  std::unordered_map<std::uint64_t, std::size_t> pivot_owner;
  std::vector<std::uint64_t> scratch;
  for (std::size_t e = edges.size(); e-- > 0;) {
    if (merges[e]) continue;
    const std::size_t a = edges[e].a;
    const std::size_t b = edges[e].b;
    const auto self = static_cast<std::int64_t>(e);
    auto& column = reduced[e];
    column.reserve(m);
    for (std::size_t w = 0; w < m; ++w) {
      if (w == a || w == b) continue;
      const auto aw = rank_of(a, w);
      const auto bw = rank_of(b, w);
      if (aw == kNone || bw == kNone) continue;
      std::uint64_t key;
      if (self > aw && self > bw) key = static_cast<std::uint64_t>(self) * mm + w;
      else if (aw > bw) key = static_cast<std::uint64_t>(aw) * mm + b;
      else key = static_cast<std::uint64_t>(bw) * mm + a;
      column.push_back(key);
    }
    std::sort(column.begin(), column.end());
    while (!column.empty()) {
      const auto owner = pivot_owner.find(column.front());
      if (owner == pivot_owner.end()) break;
      add_column(column, reduced[owner->second], scratch);
    }
    if (column.empty()) {
      push_bar(barcode, 1, edges[e].value, kInf);
    } else {
      pivot_owner.emplace(column.front(), e);
      push_bar(barcode, 1, edges[e].value, death_of(column.front()));
    }
  }
  barcode.canonicalize();
  return barcode;
}

TopoFeatureVector barcode_features(const Barcode& barcode, double cap) {
  TopoFeatureVector features{};
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& bars = barcode.bars[k];
    if (bars.empty()) continue;
    std::vector<double> births, deaths, lengths;
    for (const auto& bar : bars) {
      if (!bar.infinite() && bar.death > cap) {
        throw std::invalid_argument("feature cap " + csv::format_double(cap) + " below a finite death " +
                                    csv::format_double(bar.death));
      }
      const double death = bar.infinite() ? cap : bar.death;
      births.push_back(bar.birth);
      deaths.push_back(death);
      lengths.push_back(std::max(0.0, death - bar.birth));
    }
    const double count = static_cast<double>(bars.size());
    const double total = std::accumulate(lengths.begin(), lengths.end(), 0.0);
    const double mean = total / count;
    double var = 0.0;
    for (double p : lengths) var += (p - mean) * (p - mean);
    double entropy = 0.0;
    if (bars.size() > 1 && total > 0.0) {
      for (double p : lengths) {
        if (p > 0.0) entropy -= (p / total) * std::log(p / total);
      }
    }
    auto* out = features.data() + k * kFeaturesPerDim;
    out[0] = count;
    out[1] = *std::max_element(lengths.begin(), lengths.end());
    out[2] = total;
    out[3] = mean;
    out[4] = std::sqrt(var / count);
    out[5] = std::accumulate(births.begin(), births.end(), 0.0) / count;
    out[6] = std::accumulate(deaths.begin(), deaths.end(), 0.0) / count;
    out[7] = entropy;
  }
  return features;
}

std::vector<std::string> topo_feature_names() {
  static const char* const kNames[kFeaturesPerDim] = {
      "bar_count", "max_persistence", "total_persistence", "mean_persistence",
      "persistence_stddev", "mean_birth", "mean_death", "persistence_entropy"};
  std::vector<std::string> names;
  for (int k = 0; k < 2; ++k) {
    for (const char* name : kNames) names.push_back("h" + std::to_string(k) + "_" + name);
  }
  return names;
}

void write_barcode_csv_header(std::ostream& out) { out << "customer_id,component,dim,birth,death\n"; }

void write_barcode_csv(std::ostream& out, std::string_view customer_id, char component, const Barcode& barcode) {
  for (int k = 0; k < 2; ++k) {
    for (const auto& bar : barcode.dim(k)) {
      out << csv::escape(customer_id) << ',' << component << ',' << k << ',' << csv::format_double(bar.birth)
          << ',' << csv::format_double(bar.death) << '\n';
    }
  }
}

}  // namespace loyalty
