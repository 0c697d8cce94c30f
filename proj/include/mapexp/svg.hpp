#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mapexp {

using Series = std::vector<std::pair<double, double>>;

struct PlotSpec {
    std::string title, xlabel, ylabel;
    int width = 640, height = 400;
};

/// Polyline chart; non-finite points split a series.
std::string svg_lines(const PlotSpec& spec, const std::vector<Series>& series);

/// Histogram from bin edges (size n + 1) and counts (size n).
std::string svg_histogram(const PlotSpec& spec, const std::vector<double>& edges,
                          const std::vector<std::size_t>& counts);

}  // namespace mapexp
