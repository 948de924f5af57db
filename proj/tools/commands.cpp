#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "taib/baseline.hpp"
#include "taib/binning.hpp"
#include "taib/error.hpp"
#include "taib/eval.hpp"
#include "taib/featureset.hpp"
#include "taib/ingest.hpp"
#include "taib/io_util.hpp"
#include "taib/parallel.hpp"
#include "taib/ranking.hpp"
#include "taib/syndata.hpp"

namespace taib::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

struct InputOptions {
    std::string events;
    std::string labels;
    std::string schema;
    std::string format = "csv";
    std::string window;
};

struct LoadedInputs {
    CohortBuild build;
    ordered_json digests;
};

void add_input_options(CLI::App& cmd, InputOptions& in) {
    cmd.add_option("--events", in.events, "Events file (person_id,timestamp,feature,value)")->required();
    cmd.add_option("--labels", in.labels, "Labels CSV (person_id,label)")->required();
    cmd.add_option("--schema", in.schema, "Feature schema JSON")->required();
    cmd.add_option("--format", in.format, "Events format: csv or jsonl")->capture_default_str();
    cmd.add_option("--window", in.window, "Override the schema's observation window (e.g. 90d, 48h)");
}

LoadedInputs load_inputs(const InputOptions& in) {
    const auto format = parse_event_format(in.format);
    const auto events_text = io::read_file(in.events);
    const auto labels_text = io::read_file(in.labels);
    const auto schema_text = io::read_file(in.schema);
    auto schema = load_schema(schema_text);
    if (!in.window.empty()) {
        schema = FeatureSchema(schema.specs(), io::parse_duration(in.window), schema.anchor_feature());
    }
    LoadedInputs out{build_cohort(parse_events(events_text, format), std::move(schema),
                                  parse_labels(labels_text)),
                     ordered_json::object()};
    out.digests[in.events] = io::digest_hex(events_text);
    out.digests[in.labels] = io::digest_hex(labels_text);
    out.digests[in.schema] = io::digest_hex(schema_text);
    return out;
}

ordered_json input_config(const InputOptions& in, const FeatureSchema& schema) {
    ordered_json j;
    j["events"] = in.events;
    j["labels"] = in.labels;
    j["schema"] = in.schema;
    j["format"] = in.format;
    j["window_seconds"] = schema.window();
    return j;
}

std::string iso_utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Collects outputs for one command and writes them plus manifest.json.
class OutputSet {
public:
    OutputSet(std::string command, fs::path dir)
        : command_(std::move(command)), dir_(std::move(dir)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& contents) {
        io::write_file_atomic(dir_ / name, contents);
        outputs_.push_back(name);
    }

    void finish(ordered_json config, ordered_json inputs, std::uint64_t seed,
                std::vector<std::string> streams) {
        ordered_json m;
        m["command"] = command_;
        m["tool_version"] = kToolVersion;
        m["config"] = std::move(config);
        m["inputs"] = std::move(inputs);
        m["seed"] = seed;
        m["random_streams"] = std::move(streams);
        m["outputs"] = outputs_;
        m["started_at"] = started_at_;
        m["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        io::write_file_atomic(dir_ / "manifest.json", m.dump(2) + "\n");
    }

private:
    std::string command_;
    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::string started_at_ = iso_utc_now();
    std::vector<std::string> outputs_;
};

template <typename Writer>
std::string render(Writer&& w) {
    std::ostringstream ss;
    w(ss);
    return ss.str();
}

std::string grid_text(const std::vector<std::size_t>& grid) {
    std::string s;
    for (std::size_t i = 0; i < grid.size(); ++i) s += (i ? "," : "") + std::to_string(grid[i]);
    return s;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
    std::string out_dir;
    std::string config_file;
    std::size_t persons = 1000;
    double positive_fraction = 0.5;
    std::string window = "90d";
    std::size_t signal = 1;
    std::size_t noise = 9;
    double events_per_feature = 10.0;
    double phi = 0.25;
    bool drift = false;
    double drift_base = 0.0;
    double drift_delta = 1.0;
    std::size_t drift_samples = 12;
    std::uint64_t seed = 0;
};

syndata::GeneratorConfig resolve_gen(const GenOptions& o, const CLI::App& cmd) {
    syndata::GeneratorConfig c;
    if (!o.config_file.empty()) {
        ordered_json j;
        try {
            j = ordered_json::parse(io::read_file(o.config_file));
            c.persons = j.value("persons", c.persons);
            c.positive_fraction = j.value("positive_fraction", c.positive_fraction);
            if (j.contains("window")) {
                c.window = j["window"].is_string() ? io::parse_duration(j["window"].get<std::string>())
                                                   : j["window"].get<Seconds>();
            }
            c.signal_features = j.value("signal_features", c.signal_features);
            c.noise_features = j.value("noise_features", c.noise_features);
            c.events_per_feature = j.value("events_per_feature", c.events_per_feature);
            c.negative_concentration = j.value("negative_concentration", c.negative_concentration);
            c.seed = j.value("seed", c.seed);
            if (j.contains("drift") && !j["drift"].is_null()) {
                syndata::DriftSpec d;
                d.base = j["drift"].value("base", d.base);
                d.class_slope_delta = j["drift"].value("class_slope_delta", d.class_slope_delta);
                d.samples = j["drift"].value("samples", d.samples);
                c.drift = d;
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("malformed generator config: ") + e.what());
        }
    }
    auto given = [&](const char* flag) { return cmd.count(flag) > 0 || o.config_file.empty(); };
    if (given("--persons")) c.persons = o.persons;
    if (given("--positive-fraction")) c.positive_fraction = o.positive_fraction;
    if (given("--window")) c.window = io::parse_duration(o.window);
    if (given("--signal")) c.signal_features = o.signal;
    if (given("--noise")) c.noise_features = o.noise;
    if (given("--events-per-feature")) c.events_per_feature = o.events_per_feature;
    if (given("--phi")) c.negative_concentration = o.phi;
    if (given("--seed")) c.seed = o.seed;
    if (cmd.count("--drift") > 0) {
        c.drift = syndata::DriftSpec{o.drift_base, o.drift_delta, o.drift_samples};
    }
    return c;
}

int cmd_gen(const GenOptions& o, const CLI::App& cmd, std::ostream& out) {
    const auto config = resolve_gen(o, cmd);
    const auto generated = syndata::generate(config);

    OutputSet outputs("gen", o.out_dir);
    outputs.write("events.csv", render([&](std::ostream& s) { write_events_csv(s, generated.events); }));
    outputs.write("labels.csv", render([&](std::ostream& s) {
        s << "person_id,label\n";
        for (const auto& [id, label] : generated.labels) {
            s << io::escape_csv(id) << ',' << (label == Label::positive ? '1' : '0') << '\n';
        }
    }));
    outputs.write("schema.json", generated.schema.to_json());

    ordered_json cfg;
    cfg["persons"] = config.persons;
    cfg["positive_fraction"] = config.positive_fraction;
    cfg["window_seconds"] = config.window;
    cfg["signal_features"] = config.signal_features;
    cfg["noise_features"] = config.noise_features;
    cfg["events_per_feature"] = config.events_per_feature;
    cfg["negative_concentration"] = config.negative_concentration;
    if (config.drift) {
        cfg["drift"] = {{"base", config.drift->base},
                        {"class_slope_delta", config.drift->class_slope_delta},
                        {"samples", config.drift->samples}};
    }
    outputs.finish(cfg, ordered_json::object(), config.seed, {"labels", "person/<index>"});
    out << "generated " << config.persons << " persons, " << generated.events.size() << " events in "
        << o.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------- check

int cmd_check(const InputOptions& in, bool as_json, std::ostream& out) {
    const auto loaded = load_inputs(in);
    const auto& cohort = loaded.build.cohort;
    std::map<std::string, std::size_t> per_feature;
    for (const auto& spec : cohort.schema.specs()) per_feature[spec.name] = 0;
    std::size_t events = 0, positives = 0;
    double coverage = 0.0;
    for (const auto& p : cohort.persons) {
        events += p.events.size();
        if (p.label == Label::positive) ++positives;
        Timestamp last = p.anchor;
        for (const auto& ev : p.events) {
            if (auto idx = cohort.schema.index_of(ev.feature)) ++per_feature[ev.feature];
            last = std::max(last, ev.timestamp);
        }
        coverage += static_cast<double>(last - p.anchor + 1) / static_cast<double>(cohort.schema.window());
    }
    ordered_json j;
    j["persons_retained"] = cohort.size();
    j["persons_dropped"] = loaded.build.dropped_persons;
    j["events_retained"] = events;
    j["events_outside_window"] = loaded.build.discarded_events;
    j["positives"] = positives;
    j["negatives"] = cohort.size() - positives;
    j["window_seconds"] = cohort.schema.window();
    j["mean_window_coverage"] = cohort.size() ? coverage / static_cast<double>(cohort.size()) : 0.0;
    j["events_per_feature"] = per_feature;
    if (as_json) {
        out << j.dump(2) << "\n";
        return 0;
    }
    out << "persons retained:      " << cohort.size() << "\n"
        << "persons dropped:       " << loaded.build.dropped_persons << "\n"
        << "events retained:       " << events << "\n"
        << "events outside window: " << loaded.build.discarded_events << "\n"
        << "positives / negatives: " << positives << " / " << cohort.size() - positives << "\n"
        << "mean window coverage:  " << io::format_double(j["mean_window_coverage"].get<double>()) << "\n"
        << "events per feature:\n";
    for (const auto& [name, n] : per_feature) out << "  " << name << ": " << n << "\n";
    return 0;
}

// ---------------------------------------------------------------- rank / mi

struct RankOptions {
    InputOptions in;
    std::string out_dir;
    std::vector<std::size_t> grid = ResolutionGrid::defaults().values();
    std::uint64_t split_seed = 0;
    bool all_rows = false;
    unsigned threads = 0;
};

Cohort ranking_population(const Cohort& cohort, std::uint64_t split_seed, bool all_rows) {
    if (all_rows) return cohort;
    return cohort.subset(split(cohort, split_seed).train_and_validation());
}

int cmd_rank(const RankOptions& o, std::ostream& out) {
    const auto loaded = load_inputs(o.in);
    const auto population = ranking_population(loaded.build.cohort, o.split_seed, o.all_rows);
    const auto report = rank_features(population, ResolutionGrid(o.grid), o.threads);

    OutputSet outputs("rank", o.out_dir);
    outputs.write("taib_report.json", report_to_json(report));
    outputs.write("taib_report.csv", render([&](std::ostream& s) { write_report_csv(s, report); }));
    auto cfg = input_config(o.in, loaded.build.cohort.schema);
    cfg["grid"] = o.grid;
    cfg["split_seed"] = o.split_seed;
    cfg["population"] = o.all_rows ? "all" : "train+validation";
    cfg["threads"] = o.threads;
    outputs.finish(cfg, loaded.digests, o.split_seed, {"split"});
    out << "ranked " << report.features.size() << " features on " << population.size()
        << " persons; top: " << report.features.front().name << "\n";
    return 0;
}

int cmd_mi(const RankOptions& o, std::ostream& out) {
    const auto loaded = load_inputs(o.in);
    const auto population = ranking_population(loaded.build.cohort, o.split_seed, o.all_rows);
    const auto report = rank_by_mi(population);

    OutputSet outputs("mi", o.out_dir);
    outputs.write("mi_report.json", mi_report_to_json(report));
    outputs.write("mi_report.csv", render([&](std::ostream& s) { write_mi_report_csv(s, report); }));
    auto cfg = input_config(o.in, loaded.build.cohort.schema);
    cfg["split_seed"] = o.split_seed;
    cfg["population"] = o.all_rows ? "all" : "train+validation";
    outputs.finish(cfg, loaded.digests, o.split_seed, {"split"});
    out << "ranked " << report.features.size() << " features by mutual information; top: "
        << report.features.front().name << "\n";
    return 0;
}

// ---------------------------------------------------------------- build

struct BuildOptions {
    InputOptions in;
    std::string out_dir;
    std::string report;
    std::optional<std::size_t> w;
    std::size_t L = 1;
    unsigned threads = 0;
};

int cmd_build(const BuildOptions& o, std::ostream& out) {
    auto loaded = load_inputs(o.in);
    const auto& cohort = loaded.build.cohort;
    const auto K = cohort.schema.size();
    const auto w = o.w.value_or(K);
    if (w > K) throw ValidationError("--w " + std::to_string(w) + " exceeds K = " + std::to_string(K));
    if (o.L == 0) throw UsageError("--L must be >= 1");

    FeatureMatrix matrix;
    if (!o.report.empty()) {
        const auto text = io::read_file(o.report);
        loaded.digests[o.report] = io::digest_hex(text);
        matrix = build_dw(cohort, report_from_json(text), DwConfig{w, o.L}, o.threads);
    } else if (w == K) {
        matrix = build_feature_matrix(cohort, BinSpec::uniform(cohort.schema, o.L), o.threads);
        matrix.provenance = DwProvenance{w, o.L, ""};
    } else {
        throw UsageError("--w below K requires --report");
    }

    OutputSet outputs("build", o.out_dir);
    outputs.write("feature_matrix.csv", render([&](std::ostream& s) { write_matrix_csv(s, matrix); }));
    outputs.write("feature_matrix.json", matrix_sidecar_json(matrix, cohort.schema));
    auto cfg = input_config(o.in, cohort.schema);
    cfg["report"] = o.report;
    cfg["w"] = w;
    cfg["L"] = o.L;
    cfg["threads"] = o.threads;
    outputs.finish(cfg, loaded.digests, 0, {});
    out << "built " << matrix.rows << " x " << matrix.cols << " feature matrix (V = " << matrix.cols
        << ")\n";
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
    InputOptions in;
    std::string out_dir;
    std::string dataset = "all";
    std::size_t w = 1;
    std::string report;
    std::vector<std::size_t> grid{1, 2, 3, 5, 8, 12, 20, 30, 45, 60, 90};
    std::vector<std::size_t> taib_grid = ResolutionGrid::defaults().values();
    std::size_t runs = 40;
    std::uint64_t seed = 0;
    double learning_rate = 0.1;
    std::size_t epochs = 2000;
    std::size_t patience = 50;
    std::optional<double> l2;
    unsigned threads = 0;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
    auto loaded = load_inputs(o.in);
    SweepConfig cfg;
    if (o.dataset == "all") {
        cfg.dataset = DatasetKind::all;
    } else if (o.dataset == "dw") {
        cfg.dataset = DatasetKind::dw;
    } else {
        throw UsageError("--dataset must be 'all' or 'dw'");
    }
    cfg.w = o.w;
    if (!o.report.empty()) {
        const auto text = io::read_file(o.report);
        loaded.digests[o.report] = io::digest_hex(text);
        cfg.report = report_from_json(text);
    }
    cfg.taib_grid = o.taib_grid;
    cfg.grid = o.grid;
    cfg.runs = o.runs;
    cfg.seed = o.seed;
    cfg.train.learning_rate = o.learning_rate;
    cfg.train.max_epochs = o.epochs;
    cfg.train.patience = o.patience;
    cfg.train.l2_lambda = o.l2;
    cfg.threads = o.threads;
    const auto result = sweep(loaded.build.cohort, cfg);

    OutputSet outputs("sweep", o.out_dir);
    outputs.write("sweep.csv", render([&](std::ostream& s) { write_sweep_csv(s, result); }));
    outputs.write("sweep.json", sweep_to_json(result));
    auto mcfg = input_config(o.in, loaded.build.cohort.schema);
    mcfg["dataset"] = o.dataset;
    mcfg["w"] = result.w;
    mcfg["report"] = o.report;
    mcfg["grid"] = o.grid;
    mcfg["taib_grid"] = o.taib_grid;
    mcfg["runs"] = o.runs;
    mcfg["learning_rate"] = o.learning_rate;
    mcfg["max_epochs"] = o.epochs;
    mcfg["patience"] = o.patience;
    mcfg["l2_lambda"] = o.l2 ? ordered_json(*o.l2) : ordered_json("1/N_train");
    mcfg["threads"] = o.threads;
    outputs.finish(mcfg, loaded.digests, o.seed, {"split", "model-init/<run>"});
    for (const auto& p : result.points) {
        out << "L=" << p.L << " V=" << p.V << " f1_mean=" << io::format_double(p.f1_mean) << "\n";
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-resolution analysis and binning for event-stream classification", "taib"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic labeled cohort");
    gen_cmd->add_option("--out-dir", gen.out_dir, "Output directory")->required();
    gen_cmd->add_option("--config", gen.config_file, "Generator config JSON; flags override it");
    gen_cmd->add_option("--persons", gen.persons)->capture_default_str();
    gen_cmd->add_option("--positive-fraction", gen.positive_fraction)->capture_default_str();
    gen_cmd->add_option("--window", gen.window, "Observation window")->capture_default_str();
    gen_cmd->add_option("--signal", gen.signal, "Signal features")->capture_default_str();
    gen_cmd->add_option("--noise", gen.noise, "Noise features")->capture_default_str();
    gen_cmd->add_option("--events-per-feature", gen.events_per_feature)->capture_default_str();
    gen_cmd->add_option("--phi", gen.phi, "Negative-class signal concentration")->capture_default_str();
    gen_cmd->add_flag("--drift", gen.drift, "Add a continuous drift feature");
    gen_cmd->add_option("--drift-base", gen.drift_base)->capture_default_str();
    gen_cmd->add_option("--drift-delta", gen.drift_delta)->capture_default_str();
    gen_cmd->add_option("--drift-samples", gen.drift_samples)->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed)->capture_default_str();

    InputOptions check;
    bool check_json = false;
    auto* check_cmd = app.add_subcommand("check", "Validate inputs and summarize the cohort");
    add_input_options(*check_cmd, check);
    check_cmd->add_flag("--json", check_json, "Print the summary as JSON");

    auto threads_option = [&](CLI::App& cmd, unsigned& target) {
        cmd.add_option("--threads", target, "Worker threads (0 = TAIB_THREADS or all cores)")
            ->capture_default_str();
    };

    RankOptions rank;
    auto* rank_cmd = app.add_subcommand("rank", "Rank features by separation-score slope");
    add_input_options(*rank_cmd, rank.in);
    rank_cmd->add_option("--out-dir", rank.out_dir)->required();
    rank_cmd->add_option("--grid", rank.grid, "Bin counts, comma separated")->delimiter(',');
    rank_cmd->add_option("--split-seed", rank.split_seed, "Seed of the train/validation/test split");
    rank_cmd->add_flag("--all-rows", rank.all_rows, "Rank on every person instead of train+validation");
    threads_option(*rank_cmd, rank.threads);

    RankOptions mi;
    auto* mi_cmd = app.add_subcommand("mi", "Rank features by mutual information at L = 1");
    add_input_options(*mi_cmd, mi.in);
    mi_cmd->add_option("--out-dir", mi.out_dir)->required();
    mi_cmd->add_option("--split-seed", mi.split_seed);
    mi_cmd->add_flag("--all-rows", mi.all_rows);

    BuildOptions build;
    std::size_t build_w = 0;
    auto* build_cmd = app.add_subcommand("build", "Build a feature matrix (D_w or uniform)");
    add_input_options(*build_cmd, build.in);
    build_cmd->add_option("--out-dir", build.out_dir)->required();
    build_cmd->add_option("--report", build.report, "TAIB report JSON from 'rank'");
    build_cmd->add_option("--w", build_w, "Features given L bins (default: all)");
    build_cmd->add_option("--L", build.L, "Bins for the top-w features")->required();
    threads_option(*build_cmd, build.threads);

    SweepOptions sw;
    double sweep_l2 = 0.0;
    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep L and report test F1 statistics");
    add_input_options(*sweep_cmd, sw.in);
    sweep_cmd->add_option("--out-dir", sw.out_dir)->required();
    sweep_cmd->add_option("--dataset", sw.dataset, "all or dw")->capture_default_str();
    sweep_cmd->add_option("--w", sw.w, "Top features at L bins for --dataset dw")->capture_default_str();
    sweep_cmd->add_option("--report", sw.report, "TAIB report JSON (computed when omitted)");
    sweep_cmd->add_option("--grid", sw.grid, "Bin counts, comma separated")->delimiter(',');
    sweep_cmd->add_option("--taib-grid", sw.taib_grid, "Ranking grid when no report is given")
        ->delimiter(',');
    sweep_cmd->add_option("--runs", sw.runs)->capture_default_str();
    sweep_cmd->add_option("--seed", sw.seed)->capture_default_str();
    sweep_cmd->add_option("--learning-rate", sw.learning_rate)->capture_default_str();
    sweep_cmd->add_option("--epochs", sw.epochs)->capture_default_str();
    sweep_cmd->add_option("--patience", sw.patience)->capture_default_str();
    sweep_cmd->add_option("--l2", sweep_l2, "L2 strength (default 1/N_train)");
    threads_option(*sweep_cmd, sw.threads);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*gen_cmd) return cmd_gen(gen, *gen_cmd, out);
        if (*check_cmd) return cmd_check(check, check_json, out);
        if (*rank_cmd) return cmd_rank(rank, out);
        if (*mi_cmd) return cmd_mi(mi, out);
        if (*build_cmd) {
            if (build_cmd->count("--w")) build.w = build_w;
            return cmd_build(build, out);
        }
        if (*sweep_cmd) {
            if (sweep_cmd->count("--l2")) sw.l2 = sweep_l2;
            return cmd_sweep(sw, out);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace taib::cli
