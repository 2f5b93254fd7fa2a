#include "robusttd/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace robusttd {

RunStats stats_aggregate(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("stats_aggregate needs at least one value");
    RunStats out;
    out.n = values.size();
    out.values.assign(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    out.mean = total / static_cast<double>(out.n);
    if (out.n < 2) {
        out.ci95_half_width = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    const double sd = std::sqrt(sq / static_cast<double>(out.n - 1));
    out.ci95_half_width = kZ95 * sd / std::sqrt(static_cast<double>(out.n));
    return out;
}

bool ci_separated(const RunStats& a, const RunStats& b) {
    if (std::isnan(a.ci95_half_width) || std::isnan(b.ci95_half_width)) return false;
    return a.lower() > b.upper() || b.lower() > a.upper();
}

} // namespace robusttd
