#pragma once

#include <string>
#include <vector>

#include "robusttd/envs.hpp"

namespace robusttd::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> half_width;
};

struct LinePanel {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    std::vector<Series> series;
};

struct HeatPanel {
    std::string title;
    std::vector<double> visits;  // per state, row-major
    std::vector<Cell> path;
};

// Side-by-side line charts; each series is drawn with a shaded interval band.
std::string line_charts(const std::string& title, const std::vector<LinePanel>& panels);

// Side-by-side grid heatmaps of visit counts with the path drawn as arrows.
std::string heatmaps(const GridMap& map, const std::vector<HeatPanel>& panels);

} // namespace robusttd::svg
