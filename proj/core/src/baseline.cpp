#include "taib/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "json.hpp"
#include "taib/error.hpp"
#include "taib/io_util.hpp"

namespace taib {

namespace {

constexpr std::size_t kMaxDistinct = 32;
constexpr std::size_t kDeciles = 10;
constexpr std::size_t kNullBucket = std::max(kMaxDistinct, kDeciles) + 1;

}  // namespace

double mutual_information(std::span<const std::size_t> buckets, std::span<const Label> labels) {
    if (buckets.size() != labels.size()) {
        throw ValidationError("mutual_information: value and label counts differ");
    }
    std::map<std::size_t, std::array<std::uint64_t, 2>> joint;
    std::array<std::uint64_t, 2> ny{0, 0};
    for (std::size_t i = 0; i < buckets.size(); ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        ++joint[buckets[i]][y];
        ++ny[y];
    }
    if (ny[0] == 0 || ny[1] == 0) throw ValidationError("mutual information needs both classes present");
    const auto n = static_cast<std::uint64_t>(buckets.size());
    double mi = 0.0;
    for (const auto& [_, counts] : joint) {
        const auto nx = counts[0] + counts[1];
        for (std::size_t y = 0; y < 2; ++y) {
            if (counts[y] == 0) continue;
            const double ratio = static_cast<double>(counts[y] * n) / static_cast<double>(nx * ny[y]);
            mi += static_cast<double>(counts[y]) / static_cast<double>(n) * std::log(ratio);
        }
    }
    return std::max(mi, 0.0);
}

std::vector<std::size_t> discretize(std::span<const Cell> values, FeatureKind kind) {
    std::vector<double> observed;
    for (const auto& v : values) {
        if (v) observed.push_back(*v);
    }
    std::sort(observed.begin(), observed.end());
    std::vector<std::size_t> out(values.size(), kNullBucket);

    if (kind == FeatureKind::continuous) {
        std::vector<double> edges;
        for (std::size_t k = 1; k < kDeciles && !observed.empty(); ++k) {
            edges.push_back(observed[k * observed.size() / kDeciles]);
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!values[i]) continue;
            out[i] = static_cast<std::size_t>(
                std::upper_bound(edges.begin(), edges.end(), *values[i]) - edges.begin());
        }
        return out;
    }

    observed.erase(std::unique(observed.begin(), observed.end()), observed.end());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) continue;
        const auto pos = static_cast<std::size_t>(
            std::lower_bound(observed.begin(), observed.end(), *values[i]) - observed.begin());
        out[i] = std::min(pos, kMaxDistinct - 1);
    }
    return out;
}

double mi_score(std::span<const Cell> values, FeatureKind kind, std::span<const Label> labels) {
    const auto buckets = discretize(values, kind);
    return mutual_information(buckets, labels);
}

const MiScore& MiReport::by_name(std::string_view name) const {
    for (const auto& f : features) {
        if (f.name == name) return f;
    }
    throw ValidationError("MI report has no feature '" + std::string(name) + "'");
}

MiReport rank_by_mi(const Cohort& cohort) {
    const auto labels = cohort.labels();
    MiReport report;
    for (const auto& spec : cohort.schema.specs()) {
        const auto binned = bin_cohort_feature(cohort, spec.name, 1);
        report.features.push_back({spec.name, mi_score(binned.cells, spec.kind, labels), 0});
    }
    std::sort(report.features.begin(), report.features.end(), [](const auto& a, const auto& b) {
        if (a.mi != b.mi) return a.mi > b.mi;
        return a.name < b.name;
    });
    for (std::size_t i = 0; i < report.features.size(); ++i) report.features[i].rank = i + 1;
    return report;
}

std::string mi_report_to_json(const MiReport& report) {
    nlohmann::ordered_json j;
    auto features = nlohmann::ordered_json::array();
    for (const auto& f : report.features) {
        nlohmann::ordered_json e;
        e["name"] = f.name;
        e["mi"] = f.mi;
        e["rank"] = f.rank;
        features.push_back(std::move(e));
    }
    j["estimator"] = "plug-in histogram, nats, L=1";
    j["features"] = std::move(features);
    return j.dump(2) + "\n";
}

void write_mi_report_csv(std::ostream& out, const MiReport& report) {
    out << "feature,rank,mi\n";
    for (const auto& f : report.features) {
        out << io::escape_csv(f.name) << ',' << f.rank << ',' << io::format_double(f.mi) << '\n';
    }
}

}  // namespace taib
