#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robusttd {

/// Mean with a normal-approximation 95% interval: 1.96 * sd / sqrt(n), with
/// the sample standard deviation. n == 1 has no interval and reports NaN.
struct RunStats {
    double mean = 0.0;
    std::size_t n = 0;
    double ci95_half_width = 0.0;
    std::vector<double> values;
    // Episodes that hit the step cap (evaluation only).
    std::size_t capped = 0;

    double lower() const { return mean - ci95_half_width; }
    double upper() const { return mean + ci95_half_width; }
};

inline constexpr double kZ95 = 1.96;

RunStats stats_aggregate(std::span<const double> values);

/// True when the two 95% intervals are disjoint. Intervals of NaN width never separate.
bool ci_separated(const RunStats& a, const RunStats& b);

} // namespace robusttd
