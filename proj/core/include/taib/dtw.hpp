#pragma once

#include <cstddef>
#include <span>

namespace taib::dtw {

/// Classic symmetric DTW with local cost |a_i - b_j| and steps (1,0), (0,1),
/// (1,1); D(0,0) = c(0,0), no path-length normalization. Uses two rows of
/// min(|a|, |b|) doubles. Throws ValidationError on an empty input.
double distance(std::span<const double> a, std::span<const double> b);

/// Same recursion restricted to the Sakoe-Chiba band |i - j| <= band_radius.
/// The band must admit a path: band_radius >= ||a| - |b||.
double distance_banded(std::span<const double> a, std::span<const double> b,
                       std::size_t band_radius);

/// Reference value by exhaustive enumeration of every monotone,
/// boundary-anchored warping path. Only for |a| * |b| <= 36.
double oracle(std::span<const double> a, std::span<const double> b);

}  // namespace taib::dtw
