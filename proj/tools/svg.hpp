#pragma once

#include <string>
#include <vector>

namespace fosr::svg {

enum class Style { solid_black, blue_squares, red_dashed };

struct Series {
  std::string label;
  std::vector<double> values;  // one per grid point
  Style style = Style::solid_black;
};

// Static SVG 1.1 line chart of coefficient functions over a common grid. Each
// series is a <polyline> whose points are formatted with three decimals.
std::string render_coefficient_plot(const std::vector<double>& grid, const std::vector<Series>& series,
                                    const std::string& title);

}  // namespace fosr::svg
