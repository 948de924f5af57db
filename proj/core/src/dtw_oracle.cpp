#include <cmath>
#include <limits>

#include "taib/dtw.hpp"
#include "taib/error.hpp"

namespace taib::dtw {

namespace {

struct PathSearch {
    std::span<const double> a;
    std::span<const double> b;
    double best = std::numeric_limits<double>::infinity();

    // Walks every path from (i, j) to the end cell, accumulating the cost of
    // visited cells. No pruning: each complete path is scored.
    void walk(std::size_t i, std::size_t j, double cost) {
        cost += std::fabs(a[i] - b[j]);
        const bool last_i = i + 1 == a.size();
        const bool last_j = j + 1 == b.size();
        if (last_i && last_j) {
            if (cost < best) best = cost;
            return;
        }
        if (!last_i) walk(i + 1, j, cost);
        if (!last_j) walk(i, j + 1, cost);
        if (!last_i && !last_j) walk(i + 1, j + 1, cost);
    }
};

}  // namespace

double oracle(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ValidationError("DTW of an empty sequence");
    if (a.size() * b.size() > 36) throw ValidationError("oracle limited to |a|*|b| <= 36");
    PathSearch search{a, b};
    search.walk(0, 0, 0.0);
    return search.best;
}

}  // namespace taib::dtw
