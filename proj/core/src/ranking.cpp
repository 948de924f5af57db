#include "taib/ranking.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "taib/dtw.hpp"
#include "taib/error.hpp"
#include "taib/io_util.hpp"
#include "taib/parallel.hpp"

namespace taib {

ResolutionGrid::ResolutionGrid(std::vector<std::size_t> values) : values_(std::move(values)) {
    if (values_.size() < 2) throw ValidationError("resolution grid needs at least two bin counts");
    if (values_.front() == 0) throw ValidationError("resolution grid values must be positive");
    for (std::size_t i = 1; i < values_.size(); ++i) {
        if (values_[i] <= values_[i - 1]) {
            throw ValidationError("resolution grid must be strictly increasing");
        }
    }
}

ResolutionGrid ResolutionGrid::defaults() {
    return ResolutionGrid({1, 2, 3, 5, 8, 12, 20, 30, 45, 60, 90});
}

SequenceSet znormalize(const BinnedFeature& feature) {
    SequenceSet out{feature.persons, feature.bins, std::vector<double>(feature.cells.size(), 0.0)};
    std::size_t n = 0;
    double sum = 0.0;
    for (const auto& c : feature.cells) {
        if (c) {
            sum += *c;
            ++n;
        }
    }
    if (n == 0) {
        throw ValidationError("feature '" + feature.feature + "' has no observations to normalize");
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& c : feature.cells) {
        if (c) ss += (*c - mean) * (*c - mean);
    }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (sd < 1e-12) return out;
    for (std::size_t i = 0; i < feature.cells.size(); ++i) {
        if (const auto& c = feature.cells[i]) out.data[i] = (*c - mean) / sd;
    }
    return out;
}

std::vector<double> centroid(const SequenceSet& vectors, std::span<const std::size_t> members) {
    if (members.empty()) throw ValidationError("centroid of an empty group");
    std::vector<double> c(vectors.length, 0.0);
    for (auto m : members) {
        const auto row = vectors.row(m);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] += row[j];
    }
    for (auto& x : c) x /= static_cast<double>(members.size());
    return c;
}

double separation_score(const SequenceSet& vectors, std::span<const Label> labels) {
    if (labels.size() != vectors.count) {
        throw ValidationError("separation_score: label count does not match vector count");
    }
    std::vector<std::size_t> negatives, positives;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == Label::positive ? positives : negatives).push_back(i);
    }
    if (negatives.empty() || positives.empty()) {
        throw ValidationError("separation_score needs both classes present");
    }
    const auto c_neg = centroid(vectors, negatives);
    const auto c_pos = centroid(vectors, positives);

    double to_pos = 0.0;
    for (auto n : negatives) to_pos += dtw::distance(vectors.row(n), c_pos);
    double to_neg = 0.0;
    for (auto p : positives) to_neg += dtw::distance(vectors.row(p), c_neg);
    return to_pos / static_cast<double>(negatives.size()) +
           to_neg / static_cast<double>(positives.size());
}

std::vector<double> score_curve(const Cohort& cohort, std::string_view feature,
                                const ResolutionGrid& grid) {
    const auto labels = cohort.labels();
    std::vector<double> curve;
    curve.reserve(grid.size());
    for (auto bins : grid.values()) {
        curve.push_back(separation_score(znormalize(bin_cohort_feature(cohort, feature, bins)), labels));
    }
    return curve;
}

LineFit slope_fit(std::span<const std::size_t> grid, std::span<const double> curve) {
    if (grid.size() != curve.size()) throw ValidationError("slope_fit: grid and curve differ in length");
    if (grid.size() < 2) throw ValidationError("slope_fit needs at least two points");
    const auto n = static_cast<double>(grid.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        mx += static_cast<double>(grid[i]);
        my += curve[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double dx = static_cast<double>(grid[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (curve[i] - my);
    }
    if (sxx == 0.0) throw ValidationError("slope_fit: all grid values are equal");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

const FeatureScore& TaibReport::by_name(std::string_view name) const {
    for (const auto& f : features) {
        if (f.name == name) return f;
    }
    throw ValidationError("report has no feature '" + std::string(name) + "'");
}

std::vector<std::string> TaibReport::top(std::size_t w) const {
    if (w > features.size()) {
        throw ValidationError("requested top " + std::to_string(w) + " of " +
                              std::to_string(features.size()) + " ranked features");
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < w; ++i) out.push_back(features[i].name);
    return out;
}

TaibReport rank_features(const Cohort& cohort, const ResolutionGrid& grid, unsigned threads) {
    const auto& specs = cohort.schema.specs();
    if (specs.empty()) throw ValidationError("schema has no features to rank");
    const auto labels = cohort.labels();
    const bool has_pos = std::count(labels.begin(), labels.end(), Label::positive) > 0;
    const bool has_neg = std::count(labels.begin(), labels.end(), Label::negative) > 0;
    if (!has_pos || !has_neg) throw ValidationError("ranking needs both classes present");

    const auto& bins = grid.values();
    std::vector<double> scores(specs.size() * bins.size());
    parallel_for(scores.size(), threads, [&](std::size_t task) {
        const auto k = task / bins.size();
        const auto g = task % bins.size();
        scores[task] = separation_score(
            znormalize(bin_cohort_feature(cohort, specs[k].name, bins[g])), labels);
    });

    TaibReport report{bins, {}};
    for (std::size_t k = 0; k < specs.size(); ++k) {
        FeatureScore fs;
        fs.name = specs[k].name;
        fs.curve.assign(scores.begin() + static_cast<std::ptrdiff_t>(k * bins.size()),
                        scores.begin() + static_cast<std::ptrdiff_t>((k + 1) * bins.size()));
        const auto fit = slope_fit(bins, fs.curve);
        fs.slope = fit.slope;
        fs.intercept = fit.intercept;
        report.features.push_back(std::move(fs));
    }
    std::sort(report.features.begin(), report.features.end(), [](const auto& a, const auto& b) {
        if (a.slope != b.slope) return a.slope > b.slope;
        return a.name < b.name;
    });
    for (std::size_t i = 0; i < report.features.size(); ++i) report.features[i].rank = i + 1;
    return report;
}

std::string report_to_json(const TaibReport& report) {
    nlohmann::ordered_json j;
    j["grid"] = report.grid;
    auto features = nlohmann::ordered_json::array();
    for (const auto& f : report.features) {
        nlohmann::ordered_json e;
        e["name"] = f.name;
        e["curve"] = f.curve;
        e["slope"] = f.slope;
        e["intercept"] = f.intercept;
        e["rank"] = f.rank;
        features.push_back(std::move(e));
    }
    j["features"] = std::move(features);
    return j.dump(2) + "\n";
}

TaibReport report_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        TaibReport report;
        report.grid = j.at("grid").get<std::vector<std::size_t>>();
        for (const auto& e : j.at("features")) {
            FeatureScore f;
            f.name = e.at("name").get<std::string>();
            f.curve = e.at("curve").get<std::vector<double>>();
            f.slope = e.at("slope").get<double>();
            f.intercept = e.at("intercept").get<double>();
            f.rank = e.at("rank").get<std::size_t>();
            report.features.push_back(std::move(f));
        }
        std::sort(report.features.begin(), report.features.end(),
                  [](const auto& a, const auto& b) { return a.rank < b.rank; });
        for (std::size_t i = 0; i < report.features.size(); ++i) {
            if (report.features[i].rank != i + 1) {
                throw ValidationError("report ranks are not a permutation of 1..K");
            }
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed TAIB report: ") + e.what());
    }
}

void write_report_csv(std::ostream& out, const TaibReport& report) {
    out << "feature,rank,slope,intercept";
    for (auto L : report.grid) out << ",S_" << L;
    out << '\n';
    for (const auto& f : report.features) {
        out << io::escape_csv(f.name) << ',' << f.rank << ',' << io::format_double(f.slope) << ','
            << io::format_double(f.intercept);
        for (double s : f.curve) out << ',' << io::format_double(s);
        out << '\n';
    }
}

}  // namespace taib
