#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "taib/ingest.hpp"

namespace taib {

/// Bins per feature (L_k). Bin duration is window / L_k seconds, not
/// necessarily an integer.
class BinSpec {
public:
    BinSpec(const FeatureSchema& schema, std::map<std::string, std::size_t> bins_per_feature);
    static BinSpec uniform(const FeatureSchema& schema, std::size_t bins);

    [[nodiscard]] std::size_t bins(std::string_view feature) const;
    [[nodiscard]] const std::map<std::string, std::size_t, std::less<>>& entries() const noexcept {
        return bins_;
    }
    /// Sum of L_k over the schema (the column count V).
    [[nodiscard]] std::size_t total_columns() const noexcept;

private:
    std::map<std::string, std::size_t, std::less<>> bins_;
};

/// floor(offset * bins / window) using exact integer arithmetic, where
/// offset = t - t0. Requires 0 <= offset < window.
std::size_t bin_index(Timestamp t, Timestamp t0, Seconds window, std::size_t bins);

using Cell = std::optional<double>;

/// Cells of one person's feature at `bins` resolution. `events` holds that
/// person's in-window events for this feature only.
std::vector<Cell> bin_feature(std::span<const EventRecord> events, Timestamp t0,
                              const FeatureSpec& spec, std::size_t bins, Seconds window);

/// One feature binned for every person: N x bins cells, row-major.
struct BinnedFeature {
    std::string feature;
    FeatureKind kind = FeatureKind::count;
    std::size_t bins = 1;
    std::size_t persons = 0;
    std::vector<Cell> cells;

    [[nodiscard]] std::span<const Cell> row(std::size_t person) const {
        return {cells.data() + person * bins, bins};
    }
};

/// Bins a single feature of the cohort at `bins` resolution.
BinnedFeature bin_cohort_feature(const Cohort& cohort, std::string_view feature, std::size_t bins);

struct ColumnMeta {
    std::string feature;
    std::size_t bin = 0;
    std::size_t bins = 1;
    FeatureKind kind = FeatureKind::count;

    friend bool operator==(const ColumnMeta&, const ColumnMeta&) = default;
};

struct DwProvenance {
    std::size_t w = 0;
    std::size_t L = 1;
    std::string report_digest;

    friend bool operator==(const DwProvenance&, const DwProvenance&) = default;
};

/// N x V matrix with an explicit null mask.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;       ///< row-major; 0 where null
    std::vector<std::uint8_t> null;   ///< 1 where the cell has no observation
    std::vector<ColumnMeta> columns;
    std::vector<std::string> person_ids;
    std::vector<Label> labels;
    std::map<std::string, std::size_t, std::less<>> bin_spec;
    std::optional<DwProvenance> provenance;

    [[nodiscard]] double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    [[nodiscard]] bool is_null(std::size_t r, std::size_t c) const {
        return null[r * cols + c] != 0;
    }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Row n concatenates person n's binned vectors in schema order. Persons are
/// processed in parallel on `threads` workers (0 = default); the result is
/// identical for any thread count.
FeatureMatrix build_feature_matrix(const Cohort& cohort, const BinSpec& spec, unsigned threads = 1);

/// Percent of cells that are null, or zero-valued in a count column.
double sparsity(const FeatureMatrix& matrix);

/// CSV export: `person_id,label,<feature>__b<i>_of_<Lk>,...`; nulls empty.
void write_matrix_csv(std::ostream& out, const FeatureMatrix& matrix);

/// Sidecar metadata: bin spec, columns, provenance, schema digest.
std::string matrix_sidecar_json(const FeatureMatrix& matrix, const FeatureSchema& schema);

}  // namespace taib
