#pragma once

#include <string>
#include <vector>

namespace duel {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal standalone SVG line chart: axes, min/max tick labels, one
/// polyline per series and a legend.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::vector<Series>& series, int width = 640, int height = 400);

}  // namespace duel
