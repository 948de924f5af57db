#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taib/binning.hpp"
#include "taib/ingest.hpp"

namespace taib {

/// Strictly increasing bin counts to score each feature at. At least two
/// points, so a slope is defined.
class ResolutionGrid {
public:
    explicit ResolutionGrid(std::vector<std::size_t> values);
    /// {1, 2, 3, 5, 8, 12, 20, 30, 45, 60, 90}
    static ResolutionGrid defaults();

    [[nodiscard]] const std::vector<std::size_t>& values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<std::size_t> values_;
};

/// `count` sequences of equal `length`, row-major.
struct SequenceSet {
    std::size_t count = 0;
    std::size_t length = 0;
    std::vector<double> data;

    [[nodiscard]] std::span<const double> row(std::size_t i) const {
        return {data.data() + i * length, length};
    }
};

/// Z-scores every non-null cell using the mean and population standard
/// deviation pooled over all persons and bins. Null cells become 0. A
/// spread below 1e-12 maps every cell to 0. Throws if every cell is null.
SequenceSet znormalize(const BinnedFeature& feature);

/// Elementwise mean of the selected rows.
std::vector<double> centroid(const SequenceSet& vectors, std::span<const std::size_t> members);

/// Mean DTW distance from each negative to the positive centroid plus mean
/// DTW distance from each positive to the negative centroid.
double separation_score(const SequenceSet& vectors, std::span<const Label> labels);

/// Separation score of one feature at every grid resolution, in grid order.
std::vector<double> score_curve(const Cohort& cohort, std::string_view feature,
                                const ResolutionGrid& grid);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares of `curve` against `grid`.
LineFit slope_fit(std::span<const std::size_t> grid, std::span<const double> curve);

struct FeatureScore {
    std::string name;
    std::vector<double> curve;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t rank = 0;

    friend bool operator==(const FeatureScore&, const FeatureScore&) = default;
};

struct TaibReport {
    std::vector<std::size_t> grid;
    std::vector<FeatureScore> features;  ///< ordered by rank

    [[nodiscard]] const FeatureScore& by_name(std::string_view name) const;
    /// Names of the top `w` features.
    [[nodiscard]] std::vector<std::string> top(std::size_t w) const;

    friend bool operator==(const TaibReport&, const TaibReport&) = default;
};

/// Scores every schema feature over the grid and ranks by descending slope,
/// ties broken by feature name. (feature, resolution) pairs are evaluated on
/// `threads` workers (0 = default); the report does not depend on it.
TaibReport rank_features(const Cohort& cohort, const ResolutionGrid& grid, unsigned threads = 0);

std::string report_to_json(const TaibReport& report);
TaibReport report_from_json(std::string_view text);
void write_report_csv(std::ostream& out, const TaibReport& report);

}  // namespace taib
