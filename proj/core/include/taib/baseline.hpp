#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "taib/binning.hpp"
#include "taib/ingest.hpp"

namespace taib {

/// Plug-in estimate of I(X; Y) in nats from already-discretized X buckets.
double mutual_information(std::span<const std::size_t> buckets, std::span<const Label> labels);

/// Bucket assignment for one feature's single-bin summaries. Counts and
/// static values keep one bucket per distinct value (the 32nd bucket absorbs
/// every larger value); continuous values fall into deciles of the observed
/// values, nulls into their own bucket.
std::vector<std::size_t> discretize(std::span<const Cell> values, FeatureKind kind);

/// MI between a feature's single-bin summary and the label.
double mi_score(std::span<const Cell> values, FeatureKind kind, std::span<const Label> labels);

struct MiScore {
    std::string name;
    double mi = 0.0;
    std::size_t rank = 0;

    friend bool operator==(const MiScore&, const MiScore&) = default;
};

struct MiReport {
    std::vector<MiScore> features;  ///< ordered by rank

    [[nodiscard]] const MiScore& by_name(std::string_view name) const;
    friend bool operator==(const MiReport&, const MiReport&) = default;
};

/// Ranks schema features by descending MI at L = 1, ties by name.
MiReport rank_by_mi(const Cohort& cohort);

std::string mi_report_to_json(const MiReport& report);
void write_mi_report_csv(std::ostream& out, const MiReport& report);

}  // namespace taib
