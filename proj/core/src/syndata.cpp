#include "taib/syndata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "taib/error.hpp"
#include "taib/random.hpp"

namespace taib::syndata {

void GeneratorConfig::validate() const {
    if (persons == 0) throw ValidationError("generator needs at least one person");
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) {
        throw ValidationError("positive_fraction must lie in (0, 1)");
    }
    if (window <= 0) throw ValidationError("window must be positive");
    if (signal_features == 0) throw ValidationError("generator needs at least one signal feature");
    if (!(events_per_feature > 0.0) || !std::isfinite(events_per_feature)) {
        throw ValidationError("events_per_feature must be positive");
    }
    if (!(negative_concentration > 0.0 && negative_concentration <= 1.0)) {
        throw ValidationError("negative_concentration must lie in (0, 1]");
    }
    if (drift && drift->samples == 0) throw ValidationError("drift needs at least one sample");
}

std::string signal_name(std::size_t i) { return "signal_" + std::to_string(i); }
std::string noise_name(std::size_t i) { return "noise_" + std::to_string(i); }
std::string drift_name() { return "drift_0"; }

namespace {

std::string person_name(std::size_t i, std::size_t total) {
    const auto width = std::to_string(total > 0 ? total - 1 : 0).size();
    auto digits = std::to_string(i);
    return "p" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

FeatureSchema make_schema(const GeneratorConfig& config) {
    auto feature = [](std::string name, FeatureKind kind) {
        FeatureSpec spec;
        spec.name = std::move(name);
        spec.kind = kind;
        return spec;
    };
    std::vector<FeatureSpec> specs;
    for (std::size_t i = 0; i < config.signal_features; ++i) {
        specs.push_back(feature(signal_name(i), FeatureKind::count));
    }
    for (std::size_t i = 0; i < config.noise_features; ++i) {
        specs.push_back(feature(noise_name(i), FeatureKind::count));
    }
    if (config.drift) specs.push_back(feature(drift_name(), FeatureKind::continuous));
    return FeatureSchema(std::move(specs), config.window, std::string(kAnchorFeature));
}

Timestamp uniform_time(rng::Engine& eng, double span) {
    const auto t = static_cast<Timestamp>(std::floor(rng::uniform01(eng) * span));
    return std::clamp<Timestamp>(t, 0, static_cast<Timestamp>(std::ceil(span)) - 1);
}

}  // namespace

Generated generate(const GeneratorConfig& config) {
    config.validate();
    Generated out{{}, {}, make_schema(config)};

    std::vector<Label> labels(config.persons, Label::negative);
    const auto positives = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.positive_fraction * static_cast<double>(config.persons))),
        1, config.persons > 1 ? config.persons - 1 : 1);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), Label::positive);
    auto label_eng = rng::make_engine(config.seed, "labels");
    rng::shuffle(labels.begin(), labels.end(), label_eng);

    const auto window = static_cast<double>(config.window);
    const double concentrated = window * config.negative_concentration;

    for (std::size_t i = 0; i < config.persons; ++i) {
        const auto id = person_name(i, config.persons);
        const bool positive = labels[i] == Label::positive;
        out.labels.emplace(id, labels[i]);
        auto eng = rng::make_engine(config.seed, "person", i);

        std::vector<EventRecord> events;
        events.push_back({id, 0, kAnchorFeature, std::monostate{}});
        auto emit_counts = [&](const std::string& feature, double span) {
            const auto n = rng::poisson(eng, config.events_per_feature);
            for (std::uint64_t e = 0; e < n; ++e) {
                events.push_back({id, uniform_time(eng, span), feature, std::monostate{}});
            }
        };
        for (std::size_t s = 0; s < config.signal_features; ++s) {
            emit_counts(signal_name(s), positive ? window : concentrated);
        }
        for (std::size_t s = 0; s < config.noise_features; ++s) emit_counts(noise_name(s), window);
        if (config.drift) {
            const auto& d = *config.drift;
            for (std::size_t m = 0; m < d.samples; ++m) {
                const auto t = static_cast<Timestamp>(
                    std::floor(window * static_cast<double>(m) / static_cast<double>(d.samples)));
                const double frac = static_cast<double>(t) / window;
                const double value = d.base + (positive ? d.class_slope_delta : 0.0) * frac +
                                     rng::standard_normal(eng);
                events.push_back({id, t, drift_name(), value});
            }
        }
        std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            if (a.feature != b.feature) return a.feature < b.feature;
            return a.value < b.value;
        });
        out.events.insert(out.events.end(), std::make_move_iterator(events.begin()),
                          std::make_move_iterator(events.end()));
    }
    return out;
}

}  // namespace taib::syndata
