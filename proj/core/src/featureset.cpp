#include "taib/featureset.hpp"

#include <set>

#include "taib/error.hpp"
#include "taib/io_util.hpp"

namespace taib {

std::size_t column_count(std::size_t K, std::size_t w, std::size_t L) {
    if (w > K) throw ValidationError("w must not exceed the feature count");
    if (L == 0) throw ValidationError("L must be >= 1");
    return w * L + (K - w);
}

BinSpec dw_bin_spec(const FeatureSchema& schema, const TaibReport& report, const DwConfig& config) {
    if (config.w > schema.size()) {
        throw ValidationError("w = " + std::to_string(config.w) + " exceeds K = " +
                              std::to_string(schema.size()));
    }
    if (config.L == 0) throw ValidationError("L must be >= 1");
    std::set<std::string> ranked;
    for (const auto& f : report.features) ranked.insert(f.name);
    for (const auto& spec : schema.specs()) {
        if (!ranked.count(spec.name)) {
            throw ValidationError("report does not cover feature '" + spec.name + "'");
        }
    }
    std::map<std::string, std::size_t> bins;
    for (const auto& spec : schema.specs()) bins[spec.name] = 1;
    for (const auto& name : report.top(config.w)) bins[name] = config.L;
    return BinSpec(schema, std::move(bins));
}

FeatureMatrix build_dw(const Cohort& cohort, const TaibReport& report, const DwConfig& config,
                       unsigned threads) {
    auto matrix = build_feature_matrix(cohort, dw_bin_spec(cohort.schema, report, config), threads);
    matrix.provenance = DwProvenance{config.w, config.L, io::digest_hex(report_to_json(report))};
    return matrix;
}

}  // namespace taib
