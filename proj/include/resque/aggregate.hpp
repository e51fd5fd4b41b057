#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "resque/vec.hpp"

namespace resque {

/// Geometric aggregation: returns an input point having at least 0.51k
/// inputs within 2*Delta/3 of it. If some unknown y has >= 0.51k points
/// within Delta/3, the returned z satisfies ||z - y|| <= Delta. If no point
/// qualifies, falls back to the coordinate-wise median and sets `degraded`.
inline Vec aggregate(const std::vector<Vec>& points, double Delta, bool* degraded) {
    if (points.empty()) throw std::invalid_argument("aggregate: need at least one point");
    if (!(Delta > 0.0)) throw std::invalid_argument("aggregate: Delta must be positive");
    if (degraded) *degraded = false;
    const std::size_t k = points.size();
    if (k == 1) return points[0];

    const double reach2 = (2.0 * Delta / 3.0) * (2.0 * Delta / 3.0);
    const std::size_t needed = static_cast<std::size_t>(std::ceil(0.51 * static_cast<double>(k)));
    for (const Vec& candidate : points) {
        std::size_t close = 0;
        for (const Vec& other : points)
            if (dist2(candidate, other) <= reach2) ++close;
        if (close >= needed) return candidate;
    }

    if (degraded) *degraded = true;
    Vec median(points[0].size());
    std::vector<double> coord(k);
    for (std::size_t j = 0; j < median.size(); ++j) {
        for (std::size_t i = 0; i < k; ++i) coord[i] = points[i][j];
        auto mid = coord.begin() + static_cast<std::ptrdiff_t>(k / 2);
        std::nth_element(coord.begin(), mid, coord.end());
        median[j] = *mid;
    }
    return median;
}

}  // namespace resque
