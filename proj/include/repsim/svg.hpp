#pragma once

#include <string>
#include <vector>

namespace repsim {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal self-contained SVG line chart, one polyline per series.
// Pure function of its arguments (golden-file testable).
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<PlotSeries>& series, bool log_x = false);

}  // namespace repsim
