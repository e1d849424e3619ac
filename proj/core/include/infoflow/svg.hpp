#pragma once

#include <string>
#include <vector>

namespace infoflow {

/// One polyline on a shared x axis. NaN y-values break the line.
struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal self-contained SVG line chart: axes, ticks, legend, polylines.
void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, int width = 860,
                    int height = 540);

}  // namespace infoflow
