#pragma once

#include <string>
#include <vector>

#include "qgs/analysis.hpp"

namespace qgs::cli {

struct PlotSeries {
  std::string label;
  std::string colour;
  const Spectrum* spectrum = nullptr;
};

struct PlotPanel {
  std::string title;
  std::string y_label;
  std::vector<PlotSeries> series;
};

/// Stacked panels sharing the x axis, as a standalone SVG document.
std::string render_svg(const std::vector<PlotPanel>& panels, const std::string& x_label);

}  // namespace qgs::cli
