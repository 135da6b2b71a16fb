#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loyalty {

// m points in R^dim, stored row-major.
class PointCloud {
 public:
  PointCloud(std::size_t dim, std::vector<double> coords);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double distance(std::size_t i, std::size_t j) const;
  double diameter() const;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

// Points (s_i, s_{i+delay}, ..., s_{i+(dim-1)delay}). Requires dim >= 2,
// delay >= 1 and a series of at least (dim - 1) * delay + 1 values.
PointCloud delay_embed(std::span<const double> series, std::size_t dim, std::size_t delay);

struct Simplex {
  std::array<std::uint32_t, 3> vertices{};  // ascending; unused slots are 0
  std::uint8_t dim = 0;
  double value = 0.0;  // largest pairwise distance among the vertices

  std::partial_ordering operator<=>(const Simplex& other) const {
    if (auto c = value <=> other.value; c != 0) return c;
    if (auto c = dim <=> other.dim; c != 0) return c;
    return vertices <=> other.vertices;
  }
  bool operator==(const Simplex&) const = default;
};

// Flag complex in filtration order: (value, dimension, vertices), so faces
// always precede their cofaces.
struct FilteredComplex {
  std::vector<Simplex> simplices;
  double max_radius = 0.0;
};

// Vietoris-Rips complex up to max_dim (0, 1 or 2). Edges longer than
// max_radius are left out; max_radius defaults to the cloud diameter.
FilteredComplex rips_filtration(const PointCloud& cloud, std::optional<double> max_radius = std::nullopt,
                                int max_dim = 2);

// Z/2 boundary columns, each listing the indices of its faces in ascending order.
struct BoundaryMatrix {
  std::vector<std::vector<std::uint32_t>> columns;

  static BoundaryMatrix from_complex(const FilteredComplex& complex);
};

struct Interval {
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();

  bool infinite() const { return death == std::numeric_limits<double>::infinity(); }
  double persistence() const { return death - birth; }
  auto operator<=>(const Interval&) const = default;
};

// Intervals [birth, death) for homology dimensions 0 and 1, each dimension
// sorted by (birth, death). Zero-length intervals are never stored.
struct Barcode {
  std::array<std::vector<Interval>, 2> bars;

  const std::vector<Interval>& dim(int k) const { return bars.at(static_cast<std::size_t>(k)); }
  void canonicalize();
  bool empty() const { return bars[0].empty() && bars[1].empty(); }
  bool operator==(const Barcode&) const = default;
};

// The same pairs viewed as planar (birth, death) points.
struct PersistenceDiagram {
  std::array<std::vector<std::array<double, 2>>, 2> points;
};
PersistenceDiagram to_diagram(const Barcode& barcode);

// Standard left-to-right column reduction of the boundary matrix.
Barcode persistence(const FilteredComplex& complex);

// Dimension-0 barcode from Kruskal's algorithm: every merge at edge length w
// ends one bar at w.
Barcode h0_oracle(const PointCloud& cloud, std::optional<double> max_radius = std::nullopt);

// Dimensions 0 and 1 of persistence(rips_filtration(cloud, max_radius)) without
// materializing the boundary matrix: union-find for H0, reduction of the
// coboundary columns of the non-merging edges for H1.
Barcode rips_barcode(const PointCloud& cloud, std::optional<double> max_radius = std::nullopt);

inline constexpr std::size_t kFeaturesPerDim = 8;
using TopoFeatureVector = std::array<double, 2 * kFeaturesPerDim>;

// Per dimension: bar_count, max_persistence, total_persistence,
// mean_persistence, persistence_stddev, mean_birth, mean_death,
// persistence_entropy. Infinite deaths are replaced by cap first.
// Throws std::invalid_argument if a finite death exceeds cap.
TopoFeatureVector barcode_features(const Barcode& barcode, double cap);
std::vector<std::string> topo_feature_names();

// Rows "customer_id,component,dim,birth,death"; infinite deaths print as "inf".
void write_barcode_csv_header(std::ostream& out);
void write_barcode_csv(std::ostream& out, std::string_view customer_id, char component, const Barcode& barcode);

}  // namespace loyalty
