#include "loyalty/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace loyalty {

namespace {

constexpr double kWidth = 640.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 30.0;

std::string num(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.2f", v);
  return buffer;
}

std::string tick_label(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.4g", v);
  return buffer;
}

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string render_barcode_svg(const Barcode& barcode, double cap) {
  constexpr double kBar = 8.0;
  constexpr double kGap = 4.0;
  constexpr double kPanelHeader = 30.0;
  constexpr double kAxis = 40.0;

  double extent = cap;
  for (const auto& bars : barcode.bars) {
    for (const auto& bar : bars) {
      extent = std::max(extent, bar.birth);
      if (!bar.infinite()) extent = std::max(extent, bar.death);
    }
  }
  if (!(extent > 0.0)) extent = 1.0;
  const double plot_width = kWidth - kMarginLeft - kMarginRight;
  auto x_of = [&](double v) { return kMarginLeft + plot_width * v / extent; };

  std::array<std::vector<Interval>, 2> sorted = barcode.bars;
  for (auto& bars : sorted) {
    std::sort(bars.begin(), bars.end(), [](const Interval& a, const Interval& b) {
      if (a.birth != b.birth) return a.birth < b.birth;
      return a.persistence() < b.persistence();
    });
  }

  std::ostringstream body;
  double y = 10.0;
  if (barcode.empty()) {
    body << "  <text class=\"caption\" x=\"" << num(kWidth / 2) << "\" y=\"" << num(y + 20)
         << "\" text-anchor=\"middle\">no features</text>\n";
    y += 30.0;
  }
  for (int k = 0; k < 2; ++k) {
    const auto& bars = sorted[static_cast<std::size_t>(k)];
    body << "  <g class=\"panel\" id=\"dim" << k << "\">\n";
    body << "    <text x=\"10\" y=\"" << num(y + 18) << "\">H" << k << " (" << bars.size() << " bars)</text>\n";
    y += kPanelHeader;
    for (const auto& bar : bars) {
      const double end = bar.infinite() ? std::max(cap, bar.birth) : bar.death;
      const double x0 = x_of(bar.birth);
      const double x1 = x_of(end);
      body << "    <rect class=\"bar dim" << k << (bar.infinite() ? " infinite" : "") << "\" x=\"" << num(x0)
           << "\" y=\"" << num(y) << "\" width=\"" << num(x1 - x0) << "\" height=\"" << num(kBar)
           << "\" fill=\"" << kPalette[k] << "\"/>\n";
      if (bar.infinite()) {
        body << "    <line class=\"arrow\" x1=\"" << num(x1) << "\" y1=\"" << num(y + kBar / 2) << "\" x2=\""
             << num(x1 + 12) << "\" y2=\"" << num(y + kBar / 2) << "\" stroke=\"" << kPalette[k]
             << "\" marker-end=\"url(#arrowhead)\"/>\n";
      }
      y += kBar + kGap;
    }
    // Axis with five ticks labelled in filtration units.
    const double axis_y = y + 6.0;
    body << "    <line class=\"axis\" x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(axis_y) << "\" x2=\""
         << num(kMarginLeft + plot_width) << "\" y2=\"" << num(axis_y) << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = extent * t / 4.0;
      body << "    <text class=\"tick\" x=\"" << num(x_of(v)) << "\" y=\"" << num(axis_y + 16)
           << "\" text-anchor=\"middle\" font-size=\"10\">" << tick_label(v) << "</text>\n";
    }
    body << "    <text class=\"axis-label\" x=\"" << num(kMarginLeft + plot_width / 2) << "\" y=\""
         << num(axis_y + 30) << "\" text-anchor=\"middle\" font-size=\"11\">filtration value</text>\n";
    body << "  </g>\n";
    y = axis_y + kAxis;
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kWidth) << "\" height=\""
      << num(y) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(y) << "\">\n"
      << "  <defs>\n"
      << "    <marker id=\"arrowhead\" markerWidth=\"8\" markerHeight=\"8\" refX=\"0\" refY=\"4\" orient=\"auto\">\n"
      << "      <path d=\"M0,0 L8,4 L0,8 z\"/>\n"
      << "    </marker>\n"
      << "  </defs>\n"
      << body.str() << "</svg>\n";
  return svg.str();
}

std::string render_centroids_svg(const KShapeModel& model) {
  constexpr double kHeight = 360.0;
  constexpr double kTop = 20.0;
  constexpr double kPlotBottom = 260.0;
  constexpr double kLegendRow = 16.0;

  double lo = 0.0, hi = 0.0;
  bool first = true;
  std::size_t length = 0;
  for (const auto& c : model.centroids) {
    length = std::max(length, c.size());
    for (double v : c) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double plot_width = kWidth - kMarginLeft - kMarginRight;
  auto x_of = [&](std::size_t i) {
    return kMarginLeft + (length > 1 ? plot_width * static_cast<double>(i) / static_cast<double>(length - 1) : 0.0);
  };
  auto y_of = [&](double v) { return kPlotBottom - (kPlotBottom - kTop) * (v - lo) / (hi - lo); };

  const auto sizes = model.cluster_sizes();
  const double height = std::max(kHeight, kPlotBottom + 40.0 + kLegendRow * static_cast<double>(model.k));
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kWidth) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(height) << "\">\n";
  svg << "  <line class=\"axis\" x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(kPlotBottom) << "\" x2=\""
      << num(kMarginLeft + plot_width) << "\" y2=\"" << num(kPlotBottom) << "\" stroke=\"black\"/>\n";
  svg << "  <text class=\"tick\" x=\"" << num(kMarginLeft - 5) << "\" y=\"" << num(y_of(hi) + 4)
      << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(hi) << "</text>\n";
  svg << "  <text class=\"tick\" x=\"" << num(kMarginLeft - 5) << "\" y=\"" << num(y_of(lo) + 4)
      << "\" text-anchor=\"end\" font-size=\"10\">" << tick_label(lo) << "</text>\n";
  svg << "  <text class=\"axis-label\" x=\"" << num(kMarginLeft + plot_width / 2) << "\" y=\"" << num(kPlotBottom + 20)
      << "\" text-anchor=\"middle\" font-size=\"11\">period</text>\n";
  for (std::size_t j = 0; j < model.centroids.size(); ++j) {
    const char* color = kPalette[j % std::size(kPalette)];
    svg << "  <polyline class=\"centroid\" fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < model.centroids[j].size(); ++i) {
      svg << (i ? " " : "") << num(x_of(i)) << ',' << num(y_of(model.centroids[j][i]));
    }
    svg << "\"/>\n";
    const double ly = kPlotBottom + 40.0 + kLegendRow * static_cast<double>(j);
    svg << "  <line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(kMarginLeft + 20)
        << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color << "\"/>\n";
    svg << "  <text class=\"legend\" x=\"" << num(kMarginLeft + 26) << "\" y=\"" << num(ly)
        << "\" font-size=\"11\">cluster " << j << " (n=" << (j < sizes.size() ? sizes[j] : 0) << ")</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace loyalty
