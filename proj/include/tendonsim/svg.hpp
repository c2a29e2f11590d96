#pragma once

#include <string>
#include <vector>

namespace tendonsim {

struct PlotSeries {
  std::vector<double> x, y;
  std::string label;
  bool markers = false;  // points instead of a polyline
};

struct PlotSpec {
  std::string title, x_label, y_label;
  std::vector<PlotSeries> series;
};

/// Standalone SVG 1.1 line plot with linear axes and tick labels.
std::string render_svg(const PlotSpec& plot);
void write_svg(const std::string& path, const PlotSpec& plot);

}  // namespace tendonsim
