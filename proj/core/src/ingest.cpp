#include "taib/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "taib/error.hpp"
#include "taib/io_util.hpp"

namespace taib {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::count: return "count";
        case FeatureKind::continuous: return "continuous";
        case FeatureKind::static_value: return "static";
    }
    return "count";
}

std::string_view to_string(Aggregation agg) {
    switch (agg) {
        case Aggregation::mean: return "mean";
        case Aggregation::sum: return "sum";
        case Aggregation::min: return "min";
        case Aggregation::max: return "max";
        case Aggregation::last: return "last";
    }
    return "mean";
}

FeatureKind parse_feature_kind(std::string_view text) {
    if (text == "count") return FeatureKind::count;
    if (text == "continuous") return FeatureKind::continuous;
    if (text == "static") return FeatureKind::static_value;
    throw ValidationError("unknown feature kind '" + std::string(text) + "'");
}

Aggregation parse_aggregation(std::string_view text) {
    if (text == "mean") return Aggregation::mean;
    if (text == "sum") return Aggregation::sum;
    if (text == "min") return Aggregation::min;
    if (text == "max") return Aggregation::max;
    if (text == "last") return Aggregation::last;
    throw ValidationError("unknown aggregation '" + std::string(text) + "'");
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> specs, Seconds window,
                             std::optional<std::string> anchor_feature)
    : specs_(std::move(specs)), window_(window), anchor_(std::move(anchor_feature)) {
    if (window_ <= 0) throw ValidationError("observation window must be positive");
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& name = specs_[i].name;
        if (name.empty()) throw ValidationError("feature names must be non-empty");
        if (!index_.emplace(name, i).second) {
            throw ValidationError("duplicate feature name '" + name + "'");
        }
    }
    if (anchor_) {
        if (anchor_->empty()) throw ValidationError("anchor feature name must be non-empty");
        if (index_.count(*anchor_)) {
            throw ValidationError("anchor feature '" + *anchor_ + "' must not be a model feature");
        }
    }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const FeatureSpec& FeatureSchema::spec(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw ValidationError("feature '" + std::string(name) + "' not in schema");
    return specs_[*idx];
}

bool FeatureSchema::accepts(std::string_view name) const {
    return index_of(name).has_value() || (anchor_ && *anchor_ == name);
}

std::string FeatureSchema::to_json() const {
    ordered_json j;
    j["window"] = window_;
    if (anchor_) j["anchor_feature"] = *anchor_;
    auto features = ordered_json::array();
    for (const auto& s : specs_) {
        ordered_json f;
        f["name"] = s.name;
        f["kind"] = to_string(s.kind);
        if (s.kind == FeatureKind::continuous) f["aggregation"] = to_string(s.aggregation);
        if (s.one_hot_parent) f["one_hot_parent"] = *s.one_hot_parent;
        features.push_back(std::move(f));
    }
    j["features"] = std::move(features);
    return j.dump(2) + "\n";
}

FeatureSchema load_schema(std::string_view json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("schema is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("schema must be a JSON object");
    try {
        Seconds window = 0;
        const auto& w = j.at("window");
        if (w.is_number_integer()) {
            window = w.get<Seconds>();
        } else if (w.is_string()) {
            window = io::parse_duration(w.get<std::string>());
        } else {
            throw ValidationError("schema 'window' must be an integer or duration string");
        }
        std::optional<std::string> anchor;
        if (j.contains("anchor_feature") && !j["anchor_feature"].is_null()) {
            anchor = j["anchor_feature"].get<std::string>();
        }
        std::vector<FeatureSpec> specs;
        for (const auto& f : j.at("features")) {
            FeatureSpec spec;
            spec.name = f.at("name").get<std::string>();
            spec.kind = parse_feature_kind(f.value("kind", std::string("count")));
            if (f.contains("aggregation")) {
                if (spec.kind != FeatureKind::continuous) {
                    throw ValidationError("aggregation given for non-continuous feature '" +
                                          spec.name + "'");
                }
                spec.aggregation = parse_aggregation(f["aggregation"].get<std::string>());
            }
            if (f.contains("one_hot_parent") && !f["one_hot_parent"].is_null()) {
                spec.one_hot_parent = f["one_hot_parent"].get<std::string>();
            }
            specs.push_back(std::move(spec));
        }
        return FeatureSchema(std::move(specs), window, std::move(anchor));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed schema: ") + e.what());
    } catch (const UsageError& e) {
        throw ValidationError(std::string("malformed schema: ") + e.what());
    }
}

std::vector<Label> Cohort::labels() const {
    std::vector<Label> out;
    out.reserve(persons.size());
    for (const auto& p : persons) out.push_back(p.label);
    return out;
}

Cohort Cohort::subset(const std::vector<std::size_t>& rows) const {
    Cohort out{{}, schema};
    out.persons.reserve(rows.size());
    for (auto r : rows) out.persons.push_back(persons.at(r));
    return out;
}

EventFormat parse_event_format(std::string_view text) {
    if (text == "csv") return EventFormat::csv;
    if (text == "jsonl") return EventFormat::jsonl;
    throw UsageError("unknown event format '" + std::string(text) + "' (expected csv or jsonl)");
}

namespace {

Timestamp parse_timestamp(std::string_view text, std::size_t line) {
    Timestamp ts = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), ts);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line, "malformed timestamp '" + std::string(text) + "'");
    }
    if (ts < 0) throw ParseError(line, "timestamp must be non-negative");
    return ts;
}

EventValue parse_value(std::string_view text, std::size_t line) {
    if (text.empty()) return std::monostate{};
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size()) {
        if (!std::isfinite(v)) throw ParseError(line, "non-finite value '" + std::string(text) + "'");
        return v;
    }
    return std::string(text);
}

void check_record(const EventRecord& rec, std::size_t line) {
    if (rec.person_id.empty()) throw ParseError(line, "empty person_id");
    if (rec.feature.empty()) throw ParseError(line, "empty feature name");
}

std::vector<EventRecord> parse_csv(std::istream& in) {
    std::vector<EventRecord> out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) return out;
    ++line_no;
    auto header = io::split_csv_line(line, line_no);
    if (header != std::vector<std::string>{"person_id", "timestamp", "feature", "value"}) {
        throw ParseError(1, "expected header 'person_id,timestamp,feature,value'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = io::split_csv_line(line, line_no);
        if (fields.size() != 4) {
            throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
        }
        EventRecord rec;
        rec.person_id = std::move(fields[0]);
        rec.timestamp = parse_timestamp(fields[1], line_no);
        rec.feature = std::move(fields[2]);
        rec.value = parse_value(fields[3], line_no);
        check_record(rec, line_no);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<EventRecord> parse_jsonl(std::istream& in) {
    std::vector<EventRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
        EventRecord rec;
        try {
            rec.person_id = j.at("person_id").get<std::string>();
            rec.feature = j.at("feature").get<std::string>();
            const auto& ts = j.at("timestamp");
            if (!ts.is_number_integer()) throw ParseError(line_no, "malformed timestamp");
            rec.timestamp = ts.get<Timestamp>();
            if (rec.timestamp < 0) throw ParseError(line_no, "timestamp must be non-negative");
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        if (auto it = j.find("value"); it != j.end() && !it->is_null()) {
            if (it->is_number()) {
                rec.value = it->get<double>();
            } else if (it->is_string()) {
                rec.value = it->get<std::string>();
            } else {
                throw ParseError(line_no, "value must be null, a number, or a string");
            }
        }
        check_record(rec, line_no);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

std::vector<EventRecord> parse_events(std::istream& in, EventFormat format) {
    return format == EventFormat::csv ? parse_csv(in) : parse_jsonl(in);
}

std::vector<EventRecord> parse_events(std::string_view text, EventFormat format) {
    std::istringstream in{std::string(text)};
    return parse_events(in, format);
}

std::map<std::string, Label> parse_labels(std::istream& in) {
    std::map<std::string, Label> out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) return out;
    ++line_no;
    if (io::split_csv_line(line, 1) != std::vector<std::string>{"person_id", "label"}) {
        throw ParseError(1, "expected header 'person_id,label'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = io::split_csv_line(line, line_no);
        if (fields.size() != 2) throw ParseError(line_no, "expected 2 fields");
        if (fields[0].empty()) throw ParseError(line_no, "empty person_id");
        Label label;
        if (fields[1] == "0") {
            label = Label::negative;
        } else if (fields[1] == "1") {
            label = Label::positive;
        } else {
            throw ParseError(line_no, "label must be 0 or 1, got '" + fields[1] + "'");
        }
        if (!out.emplace(fields[0], label).second) {
            throw ParseError(line_no, "duplicate label for person '" + fields[0] + "'");
        }
    }
    return out;
}

std::map<std::string, Label> parse_labels(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_labels(in);
}

CohortBuild build_cohort(const std::vector<EventRecord>& events, FeatureSchema schema,
                         const std::map<std::string, Label>& labels) {
    std::map<std::string, std::vector<EventRecord>> by_person;
    for (const auto& ev : events) {
        if (!schema.accepts(ev.feature)) {
            throw ValidationError("feature '" + ev.feature + "' (person '" + ev.person_id +
                                  "') is not in the schema");
        }
        if (auto idx = schema.index_of(ev.feature)) {
            const auto kind = schema.specs()[*idx].kind;
            if (kind != FeatureKind::count && !std::holds_alternative<double>(ev.value)) {
                throw ValidationError("feature '" + ev.feature + "' is " +
                                      std::string(to_string(kind)) +
                                      " and requires a numeric value (person '" + ev.person_id +
                                      "')");
            }
        }
        by_person[ev.person_id].push_back(ev);
    }

    std::vector<std::string> unlabeled;
    for (const auto& [id, _] : by_person) {
        if (!labels.count(id)) unlabeled.push_back(id);
    }
    if (!unlabeled.empty()) {
        std::string msg = std::to_string(unlabeled.size()) + " person(s) without a label:";
        for (std::size_t i = 0; i < unlabeled.size() && i < 10; ++i) msg += " " + unlabeled[i];
        if (unlabeled.size() > 10) msg += " ...";
        throw ValidationError(msg);
    }

    CohortBuild result{Cohort{{}, schema}, 0, 0};
    for (auto& [id, evs] : by_person) {
        Person person;
        person.id = id;
        person.label = labels.at(id);
        person.anchor = std::min_element(evs.begin(), evs.end(), [](const auto& a, const auto& b) {
                            return a.timestamp < b.timestamp;
                        })->timestamp;
        const Timestamp end = person.anchor + schema.window();
        for (auto& ev : evs) {
            if (ev.timestamp < end) {
                person.events.push_back(std::move(ev));
            } else {
                ++result.discarded_events;
            }
        }
        std::sort(person.events.begin(), person.events.end(), [](const auto& a, const auto& b) {
            if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
            if (a.feature != b.feature) return a.feature < b.feature;
            return a.value < b.value;
        });
        result.cohort.persons.push_back(std::move(person));
    }
    for (const auto& [id, _] : labels) {
        if (!by_person.count(id)) ++result.dropped_persons;
    }
    return result;
}

namespace {

std::string format_value(const EventValue& v) {
    if (std::holds_alternative<double>(v)) return io::format_double(std::get<double>(v));
    if (std::holds_alternative<std::string>(v)) return io::escape_csv(std::get<std::string>(v));
    return {};
}

}  // namespace

void write_events_csv(std::ostream& out, const std::vector<EventRecord>& events) {
    out << "person_id,timestamp,feature,value\n";
    for (const auto& ev : events) {
        out << io::escape_csv(ev.person_id) << ',' << ev.timestamp << ','
            << io::escape_csv(ev.feature) << ',' << format_value(ev.value) << '\n';
    }
}

void write_cohort_events_csv(std::ostream& out, const Cohort& cohort) {
    out << "person_id,timestamp,feature,value\n";
    for (const auto& p : cohort.persons) {
        for (const auto& ev : p.events) {
            out << io::escape_csv(ev.person_id) << ',' << ev.timestamp << ','
                << io::escape_csv(ev.feature) << ',' << format_value(ev.value) << '\n';
        }
    }
}

void write_labels_csv(std::ostream& out, const Cohort& cohort) {
    out << "person_id,label\n";
    for (const auto& p : cohort.persons) {
        out << io::escape_csv(p.id) << ',' << (p.label == Label::positive ? '1' : '0') << '\n';
    }
}

}  // namespace taib
