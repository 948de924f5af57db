#include "taib/binning.hpp"

#include <algorithm>
#include <limits>

#include "json.hpp"
#include "taib/error.hpp"
#include "taib/io_util.hpp"
#include "taib/parallel.hpp"

namespace taib {

BinSpec::BinSpec(const FeatureSchema& schema, std::map<std::string, std::size_t> bins_per_feature) {
    for (const auto& spec : schema.specs()) {
        auto it = bins_per_feature.find(spec.name);
        if (it == bins_per_feature.end()) {
            throw ValidationError("bin spec has no entry for feature '" + spec.name + "'");
        }
        if (it->second == 0) {
            throw ValidationError("bin count for feature '" + spec.name + "' must be >= 1");
        }
        bins_.emplace(spec.name, it->second);
    }
    for (const auto& [name, _] : bins_per_feature) {
        if (!schema.index_of(name)) {
            throw ValidationError("bin spec names unknown feature '" + name + "'");
        }
    }
}

BinSpec BinSpec::uniform(const FeatureSchema& schema, std::size_t bins) {
    std::map<std::string, std::size_t> m;
    for (const auto& spec : schema.specs()) m.emplace(spec.name, bins);
    return BinSpec(schema, std::move(m));
}

std::size_t BinSpec::bins(std::string_view feature) const {
    auto it = bins_.find(feature);
    if (it == bins_.end()) throw ValidationError("no bin count for '" + std::string(feature) + "'");
    return it->second;
}

std::size_t BinSpec::total_columns() const noexcept {
    std::size_t v = 0;
    for (const auto& [_, bins] : bins_) v += bins;
    return v;
}

std::size_t bin_index(Timestamp t, Timestamp t0, Seconds window, std::size_t bins) {
    const Timestamp offset = t - t0;
    if (offset < 0 || offset >= window || bins == 0) {
        throw std::out_of_range("bin_index: timestamp outside the observation window");
    }
    __extension__ using wide = __int128;
    const auto scaled = static_cast<wide>(offset) * static_cast<wide>(bins);
    return static_cast<std::size_t>(scaled / window);
}

std::vector<Cell> bin_feature(std::span<const EventRecord> events, Timestamp t0,
                              const FeatureSpec& spec, std::size_t bins, Seconds window) {
    if (bins == 0) throw ValidationError("bin count must be >= 1");
    std::vector<Cell> cells(bins);
    switch (spec.kind) {
        case FeatureKind::count: {
            std::vector<double> counts(bins, 0.0);
            for (const auto& ev : events) counts[bin_index(ev.timestamp, t0, window, bins)] += 1.0;
            for (std::size_t b = 0; b < bins; ++b) cells[b] = counts[b];
            break;
        }
        case FeatureKind::continuous: {
            std::vector<double> acc(bins, 0.0);
            std::vector<std::size_t> n(bins, 0);
            for (const auto& ev : events) {
                const double x = std::get<double>(ev.value);
                const auto b = bin_index(ev.timestamp, t0, window, bins);
                switch (spec.aggregation) {
                    case Aggregation::mean:
                    case Aggregation::sum: acc[b] += x; break;
                    case Aggregation::min: acc[b] = n[b] == 0 ? x : std::min(acc[b], x); break;
                    case Aggregation::max: acc[b] = n[b] == 0 ? x : std::max(acc[b], x); break;
                    case Aggregation::last: acc[b] = x; break;
                }
                ++n[b];
            }
            for (std::size_t b = 0; b < bins; ++b) {
                if (n[b] == 0) continue;
                cells[b] = spec.aggregation == Aggregation::mean
                               ? acc[b] / static_cast<double>(n[b])
                               : acc[b];
            }
            break;
        }
        case FeatureKind::static_value: {
            std::optional<double> value;
            for (const auto& ev : events) {
                const double x = std::get<double>(ev.value);
                if (value && *value != x) {
                    throw ValidationError("static feature '" + spec.name + "' has conflicting values for person '" +
                                          ev.person_id + "'");
                }
                value = x;
            }
            std::fill(cells.begin(), cells.end(), value);
            break;
        }
    }
    return cells;
}

namespace {

/// Per-person events split by schema feature index (anchor events dropped).
std::vector<std::vector<EventRecord>> events_by_feature(const Person& person,
                                                        const FeatureSchema& schema) {
    std::vector<std::vector<EventRecord>> out(schema.size());
    for (const auto& ev : person.events) {
        if (auto idx = schema.index_of(ev.feature)) out[*idx].push_back(ev);
    }
    return out;
}

}  // namespace

BinnedFeature bin_cohort_feature(const Cohort& cohort, std::string_view feature, std::size_t bins) {
    const auto& spec = cohort.schema.spec(feature);
    BinnedFeature out{spec.name, spec.kind, bins, cohort.size(), {}};
    out.cells.reserve(cohort.size() * bins);
    std::vector<EventRecord> mine;
    for (const auto& person : cohort.persons) {
        mine.clear();
        for (const auto& ev : person.events) {
            if (ev.feature == spec.name) mine.push_back(ev);
        }
        auto cells = bin_feature(mine, person.anchor, spec, bins, cohort.schema.window());
        out.cells.insert(out.cells.end(), cells.begin(), cells.end());
    }
    return out;
}

FeatureMatrix build_feature_matrix(const Cohort& cohort, const BinSpec& spec, unsigned threads) {
    const auto& schema = cohort.schema;
    FeatureMatrix m;
    m.rows = cohort.size();
    for (const auto& fs : schema.specs()) {
        const auto bins = spec.bins(fs.name);
        for (std::size_t b = 0; b < bins; ++b) m.columns.push_back({fs.name, b, bins, fs.kind});
    }
    m.cols = m.columns.size();
    m.values.assign(m.rows * m.cols, 0.0);
    m.null.assign(m.rows * m.cols, 0);
    m.bin_spec = spec.entries();
    for (const auto& p : cohort.persons) {
        m.person_ids.push_back(p.id);
        m.labels.push_back(p.label);
    }

    parallel_for(m.rows, threads, [&](std::size_t r) {
        const auto& person = cohort.persons[r];
        const auto grouped = events_by_feature(person, schema);
        std::size_t col = 0;
        for (std::size_t k = 0; k < schema.size(); ++k) {
            const auto& fs = schema.specs()[k];
            const auto cells = bin_feature(grouped[k], person.anchor, fs, spec.bins(fs.name),
                                           schema.window());
            for (const auto& cell : cells) {
                const auto idx = r * m.cols + col++;
                if (cell) {
                    m.values[idx] = *cell;
                } else {
                    m.null[idx] = 1;
                }
            }
        }
    });
    return m;
}

double sparsity(const FeatureMatrix& matrix) {
    if (matrix.rows == 0 || matrix.cols == 0) throw ValidationError("sparsity of an empty matrix");
    std::size_t empty = 0;
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            if (matrix.is_null(r, c) ||
                (matrix.columns[c].kind == FeatureKind::count && matrix.at(r, c) == 0.0)) {
                ++empty;
            }
        }
    }
    return 100.0 * static_cast<double>(empty) / static_cast<double>(matrix.rows * matrix.cols);
}

void write_matrix_csv(std::ostream& out, const FeatureMatrix& matrix) {
    out << "person_id,label";
    for (const auto& c : matrix.columns) {
        out << ',' << io::escape_csv(c.feature + "__b" + std::to_string(c.bin) + "_of_" +
                                     std::to_string(c.bins));
    }
    out << '\n';
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        out << io::escape_csv(matrix.person_ids[r]) << ','
            << (matrix.labels[r] == Label::positive ? '1' : '0');
        for (std::size_t c = 0; c < matrix.cols; ++c) {
            out << ',';
            if (!matrix.is_null(r, c)) out << io::format_double(matrix.at(r, c));
        }
        out << '\n';
    }
}

std::string matrix_sidecar_json(const FeatureMatrix& matrix, const FeatureSchema& schema) {
    nlohmann::ordered_json j;
    j["rows"] = matrix.rows;
    j["V"] = matrix.cols;
    j["window_seconds"] = schema.window();
    j["schema_digest"] = io::digest_hex(schema.to_json());
    nlohmann::ordered_json bins = nlohmann::ordered_json::object();
    for (const auto& fs : schema.specs()) bins[fs.name] = matrix.bin_spec.at(fs.name);
    j["bin_spec"] = std::move(bins);
    if (matrix.provenance) {
        j["w"] = matrix.provenance->w;
        j["L"] = matrix.provenance->L;
        j["report_digest"] = matrix.provenance->report_digest;
    } else {
        j["w"] = nullptr;
        j["L"] = nullptr;
    }
    if (matrix.rows > 0 && matrix.cols > 0) j["percent_empty"] = sparsity(matrix);
    return j.dump(2) + "\n";
}

}  // namespace taib
