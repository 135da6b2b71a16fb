#pragma once

#include <string>

#include "loyalty/kshape.hpp"
#include "loyalty/tda.hpp"

namespace loyalty {

// Standalone SVG 1.1 documents.

// Dimension 0 and 1 panels of horizontal bars sorted by birth, then length.
// Infinite bars run to cap and end in an arrowhead.
std::string render_barcode_svg(const Barcode& barcode, double cap);

// One polyline per centroid plus a legend with cluster sizes.
std::string render_centroids_svg(const KShapeModel& model);

}  // namespace loyalty
