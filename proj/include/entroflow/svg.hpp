#pragma once

#include <string>
#include <vector>

namespace entroflow {

struct SvgSeries {
    std::string label;
    std::vector<double> x, y;
    std::vector<double> ylo, yhi;  // optional confidence band
};

struct SvgOptions {
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    bool log_x = false;
    bool log_y = false;
    int width = 720;
    int height = 440;
};

/// Static line chart with axes, ticks, optional CI bands and a legend.
/// Output is deterministic (no timestamps or random ids).
std::string render_line_chart(const std::vector<SvgSeries>& series, const SvgOptions& opts);

}  // namespace entroflow
