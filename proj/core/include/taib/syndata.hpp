#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taib/ingest.hpp"

namespace taib::syndata {

/// Optional continuous feature observed on a regular sub-grid of the window:
/// value = base + (positive ? class_slope_delta : 0) * (t / window) + N(0, 1).
struct DriftSpec {
    double base = 0.0;
    double class_slope_delta = 1.0;
    std::size_t samples = 12;
};

struct GeneratorConfig {
    std::size_t persons = 1000;
    double positive_fraction = 0.5;
    Seconds window = 90 * 86400;
    std::size_t signal_features = 1;
    std::size_t noise_features = 9;
    /// Expected events per person per count feature.
    double events_per_feature = 10.0;
    /// Fraction of the window that holds negative-class signal events.
    double negative_concentration = 0.25;
    std::optional<DriftSpec> drift;
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr const char* kAnchorFeature = "anchor";

struct Generated {
    std::vector<EventRecord> events;  ///< sorted by (person, timestamp, feature)
    std::map<std::string, Label> labels;
    FeatureSchema schema;
};

std::string signal_name(std::size_t i);
std::string noise_name(std::size_t i);
std::string drift_name();

/// Class signal lives only in when signal events happen: both classes draw
/// Poisson(C) events per signal feature, positives spread over the whole
/// window, negatives over its first `negative_concentration` fraction. Noise
/// features are Poisson(C) uniform for everyone. Each person also gets one
/// anchor event at t = 0.
Generated generate(const GeneratorConfig& config);

}  // namespace taib::syndata
