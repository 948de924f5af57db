#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace taib {

/// Seconds since epoch.
using Timestamp = std::int64_t;
/// Duration in seconds.
using Seconds = std::int64_t;

/// Pure event (no value), a categorical token, or a finite real.
using EventValue = std::variant<std::monostate, std::string, double>;

struct EventRecord {
    std::string person_id;
    Timestamp timestamp = 0;
    std::string feature;
    EventValue value;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

enum class FeatureKind { count, continuous, static_value };
enum class Aggregation { mean, sum, min, max, last };
enum class Label : std::uint8_t { negative = 0, positive = 1 };

std::string_view to_string(FeatureKind kind);
std::string_view to_string(Aggregation agg);
FeatureKind parse_feature_kind(std::string_view text);
Aggregation parse_aggregation(std::string_view text);

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::count;
    Aggregation aggregation = Aggregation::mean;
    /// Categorical variable this one-hot column was expanded from.
    std::optional<std::string> one_hot_parent;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Ordered feature list plus the observation window length.
///
/// An optional anchor feature participates in window anchoring but is not a
/// model feature: its events fix each person's t0 and are otherwise ignored
/// by binning and ranking.
class FeatureSchema {
public:
    FeatureSchema(std::vector<FeatureSpec> specs, Seconds window,
                  std::optional<std::string> anchor_feature = std::nullopt);

    [[nodiscard]] const std::vector<FeatureSpec>& specs() const noexcept { return specs_; }
    [[nodiscard]] std::size_t size() const noexcept { return specs_.size(); }
    [[nodiscard]] Seconds window() const noexcept { return window_; }
    [[nodiscard]] const std::optional<std::string>& anchor_feature() const noexcept {
        return anchor_;
    }
    /// Index into specs(), or nullopt for unknown names (including the anchor).
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
    [[nodiscard]] const FeatureSpec& spec(std::string_view name) const;
    [[nodiscard]] bool accepts(std::string_view name) const;

    /// Canonical JSON form; load_schema(to_json()) reproduces the schema.
    [[nodiscard]] std::string to_json() const;

    friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) {
        return a.specs_ == b.specs_ && a.window_ == b.window_ && a.anchor_ == b.anchor_;
    }

private:
    std::vector<FeatureSpec> specs_;
    Seconds window_;
    std::optional<std::string> anchor_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Reads the JSON schema file format:
/// {"window": "90d", "anchor_feature": "anchor",
///  "features": [{"name": "...", "kind": "count|continuous|static",
///                "aggregation": "mean", "one_hot_parent": "..."}]}
FeatureSchema load_schema(std::string_view json_text);

struct Person {
    std::string id;
    Timestamp anchor = 0;
    Label label = Label::negative;
    /// Sorted by (timestamp, feature, value); all in [anchor, anchor + window).
    std::vector<EventRecord> events;

    friend bool operator==(const Person&, const Person&) = default;
};

struct Cohort {
    std::vector<Person> persons;  ///< sorted by id
    FeatureSchema schema;

    [[nodiscard]] std::size_t size() const noexcept { return persons.size(); }
    [[nodiscard]] std::vector<Label> labels() const;
    /// Cohort restricted to the given person indices, in the given order.
    [[nodiscard]] Cohort subset(const std::vector<std::size_t>& rows) const;

    friend bool operator==(const Cohort&, const Cohort&) = default;
};

struct CohortBuild {
    Cohort cohort;
    std::size_t dropped_persons = 0;  ///< labeled persons with no retained events
    std::size_t discarded_events = 0; ///< events at or beyond anchor + window
};

enum class EventFormat { csv, jsonl };
EventFormat parse_event_format(std::string_view text);

std::vector<EventRecord> parse_events(std::istream& in, EventFormat format);
std::vector<EventRecord> parse_events(std::string_view text, EventFormat format);

/// Labels CSV: header `person_id,label`, label in {0,1}.
std::map<std::string, Label> parse_labels(std::istream& in);
std::map<std::string, Label> parse_labels(std::string_view text);

CohortBuild build_cohort(const std::vector<EventRecord>& events, FeatureSchema schema,
                         const std::map<std::string, Label>& labels);

/// Events CSV of every retained event, persons in cohort order.
void write_events_csv(std::ostream& out, const std::vector<EventRecord>& events);
void write_cohort_events_csv(std::ostream& out, const Cohort& cohort);
void write_labels_csv(std::ostream& out, const Cohort& cohort);

}  // namespace taib
