#pragma once

#include <string>
#include <vector>

namespace bkc::cli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    std::vector<Series> series;
};

// Static line plot with markers. Non-positive values are dropped on log axes.
std::string render_svg(const PlotSpec& plot);

}  // namespace bkc::cli
