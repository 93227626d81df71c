#pragma once

#include <string>
#include <vector>

namespace aart {

// Minimal line-plot SVG writer for the report artifacts. One panel holds any
// number of series; panels stack vertically in one file. Output is
// well-formed XML and byte-reproducible.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotPanel {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    bool log_x = false;
};

void write_svg_plot(const std::string& path, const std::vector<PlotPanel>& panels);

}  // namespace aart
