#pragma once

#include <string>
#include <vector>

namespace gbflow {

struct SvgSeries {
    std::string name;
    std::string color = "#1f77b4";
    std::vector<double> x, y;
};

// Minimal SVG line chart: axes, tick labels, legend, one polyline per series.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, bool log_y = false);

}  // namespace gbflow
