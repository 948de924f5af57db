#include "taib/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "taib/error.hpp"

namespace taib::dtw {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_nonempty(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("DTW of an empty sequence");
}

}  // namespace

double distance(std::span<const double> a, std::span<const double> b) {
    require_nonempty(a, b);
    // The recursion is symmetric, so the shorter sequence can index the rows.
    if (b.size() > a.size()) std::swap(a, b);
    const std::size_t n = b.size();
    std::vector<double> prev(n), cur(n);

    prev[0] = std::fabs(a[0] - b[0]);
    for (std::size_t j = 1; j < n; ++j) prev[j] = prev[j - 1] + std::fabs(a[0] - b[j]);

    for (std::size_t i = 1; i < a.size(); ++i) {
        const double ai = a[i];
        cur[0] = prev[0] + std::fabs(ai - b[0]);
        for (std::size_t j = 1; j < n; ++j) {
            const double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = best + std::fabs(ai - b[j]);
        }
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

double distance_banded(std::span<const double> a, std::span<const double> b,
                       std::size_t band_radius) {
    require_nonempty(a, b);
    const std::size_t gap = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
    if (band_radius < gap) {
        throw ValidationError("band radius " + std::to_string(band_radius) +
                              " cannot reach the end cell (length gap " + std::to_string(gap) + ")");
    }
    if (b.size() > a.size()) std::swap(a, b);
    const std::size_t n = b.size();
    std::vector<double> prev(n, inf), cur(n, inf);

    auto lo = [&](std::size_t i) { return i > band_radius ? i - band_radius : 0; };
    auto hi = [&](std::size_t i) { return std::min(n - 1, i + band_radius); };

    prev[0] = std::fabs(a[0] - b[0]);
    for (std::size_t j = 1; j <= hi(0); ++j) prev[j] = prev[j - 1] + std::fabs(a[0] - b[j]);

    for (std::size_t i = 1; i < a.size(); ++i) {
        std::fill(cur.begin(), cur.end(), inf);
        const double ai = a[i];
        for (std::size_t j = lo(i); j <= hi(i); ++j) {
            double best = prev[j];
            if (j > 0) best = std::min({best, cur[j - 1], prev[j - 1]});
            cur[j] = best + std::fabs(ai - b[j]);
        }
        std::swap(prev, cur);
    }
    return prev[n - 1];
}

}  // namespace taib::dtw
