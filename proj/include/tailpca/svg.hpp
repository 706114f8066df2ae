#pragma once

#include <string>
#include <vector>

namespace tailpca::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// Self-contained SVG line chart: linear axes spanning the data, tick labels,
// one colored polyline plus legend entry per series. Series must be non-empty
// and have matching x/y lengths.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series);

}  // namespace tailpca::svg
