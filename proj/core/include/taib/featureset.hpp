#pragma once

#include <cstddef>

#include "taib/binning.hpp"
#include "taib/ranking.hpp"

namespace taib {

/// Top `w` ranked features get `L` bins; the remaining K - w get one bin.
struct DwConfig {
    std::size_t w = 1;
    std::size_t L = 1;
};

/// V = w * L + (K - w).
std::size_t column_count(std::size_t K, std::size_t w, std::size_t L);

BinSpec dw_bin_spec(const FeatureSchema& schema, const TaibReport& report, const DwConfig& config);

/// Mixed-resolution matrix D_w. Provenance records w, L and the report digest.
FeatureMatrix build_dw(const Cohort& cohort, const TaibReport& report, const DwConfig& config,
                       unsigned threads = 1);

}  // namespace taib
