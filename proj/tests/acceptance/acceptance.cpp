// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any selected criterion fails. `--only N` runs one criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "taib/baseline.hpp"
#include "taib/dtw.hpp"
#include "taib/eval.hpp"
#include "taib/featureset.hpp"
#include "taib/io_util.hpp"
#include "taib/random.hpp"
#include "taib/ranking.hpp"
#include "taib/syndata.hpp"

using namespace taib;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Cohort default_cohort(std::uint64_t seed, std::size_t persons = 1000, std::size_t noise = 9) {
    syndata::GeneratorConfig cfg;
    cfg.persons = persons;
    cfg.noise_features = noise;
    cfg.seed = seed;
    const auto gen = syndata::generate(cfg);
    return build_cohort(gen.events, gen.schema, gen.labels).cohort;
}

Cohort ranking_population(const Cohort& cohort, std::uint64_t seed) {
    return cohort.subset(split(cohort, seed).train_and_validation());
}

// 1 -------------------------------------------------------------------------

Outcome dtw_oracle_equivalence() {
    constexpr double kValues[] = {-1.0, 0.0, 1.0, 2.0};
    auto eng = rng::make_engine(1, "acceptance-dtw");
    auto sequence = [&] {
        std::vector<double> s(1 + rng::bounded(eng, 5));
        for (auto& v : s) v = kValues[rng::bounded(eng, 4)];
        return s;
    };
    const auto start = std::chrono::steady_clock::now();
    std::size_t mismatches = 0;
    double worst = 0.0;
    for (int i = 0; i < 50000; ++i) {
        const auto a = sequence();
        const auto b = sequence();
        const double err = std::abs(dtw::distance(a, b) - dtw::oracle(a, b));
        worst = std::max(worst, err);
        mismatches += err > 1e-12;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {mismatches == 0 && secs < 60.0,
            fmt("50000 pairs, %zu mismatches, max error %.3g, %.2f s", mismatches, worst, secs)};
}

// 2 -------------------------------------------------------------------------

Outcome column_counts() {
    struct Case {
        std::size_t K, w, L, V;
    };
    const Case cases[] = {{23, 23, 90, 2070}, {48, 48, 90, 4320}, {23, 3, 90, 290}, {48, 3, 90, 315}};
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        const auto cohort = default_cohort(c.K, 40, c.K - 1);
        const auto report = rank_features(cohort, ResolutionGrid({1, 2}), 1);
        const auto matrix = build_dw(cohort, report, DwConfig{c.w, c.L});
        const auto formula = column_count(c.K, c.w, c.L);
        ok = ok && formula == c.V && matrix.cols == c.V;
        detail += fmt("(K=%zu,w=%zu,L=%zu)->%zu/%zu ", c.K, c.w, c.L, formula, matrix.cols);
    }
    return {ok, detail};
}

// 3 and 6 -------------------------------------------------------------------

struct RankingTally {
    int signal_first = 0;
    int noise_bounded = 0;
    int mi_worse = 0;
    double signal_slope_sum = 0.0;
    double max_noise_slope_sum = 0.0;
    double mi_rank_sum = 0.0;
};

RankingTally ranking_tally(bool with_mi) {
    RankingTally t;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto population = ranking_population(default_cohort(seed), seed);
        const auto report = rank_features(population, ResolutionGrid::defaults());
        const auto& signal = report.by_name(syndata::signal_name(0));
        double max_noise = 0.0;
        for (const auto& f : report.features) {
            if (f.name != signal.name) max_noise = std::max(max_noise, std::abs(f.slope));
        }
        t.signal_first += signal.rank == 1;
        t.noise_bounded += max_noise < signal.slope / 5.0;
        t.signal_slope_sum += signal.slope;
        t.max_noise_slope_sum += max_noise;
        if (with_mi) {
            const auto mi_rank = rank_by_mi(population).by_name(signal.name).rank;
            t.mi_worse += signal.rank == 1 && mi_rank > 1;
            t.mi_rank_sum += static_cast<double>(mi_rank);
        }
    }
    return t;
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome taib_detects_signal() {
    const auto start = std::chrono::steady_clock::now();
    const auto t = ranking_tally(false);
    const double secs = elapsed(start);
    return {t.signal_first >= 38 && t.noise_bounded >= 36 && secs < 600.0,
            fmt("signal ranked 1 in %d/40 (need 38), noise bound in %d/40 (need 36), "
                "mean signal slope %.4g, mean max |noise slope| %.4g, %.0f s of 600",
                t.signal_first, t.noise_bounded, t.signal_slope_sum / 40,
                t.max_noise_slope_sum / 40, secs)};
}

Outcome taib_mi_divergence() {
    const auto t = ranking_tally(true);
    return {t.mi_worse >= 35,
            fmt("TAIB rank 1 with MI rank > 1 in %d/40 (need 35), TAIB rank 1 in %d/40, "
                "mean MI rank of signal %.2f",
                t.mi_worse, t.signal_first, t.mi_rank_sum / 40)};
}

// 4 and 5 -------------------------------------------------------------------

SweepResult run_sweep(DatasetKind kind, std::vector<std::size_t> grid) {
    SweepConfig cfg;
    cfg.dataset = kind;
    cfg.w = 1;
    cfg.grid = std::move(grid);
    cfg.runs = 40;
    cfg.seed = 0;
    return sweep(default_cohort(0), cfg);
}

Outcome f1_shape() {
    const auto start = std::chrono::steady_clock::now();
    const auto r = run_sweep(DatasetKind::all, {1, 8, 30, 90});
    const double secs = elapsed(start);
    const double f1 = r.at(1).f1_mean, f8 = r.at(8).f1_mean, f30 = r.at(30).f1_mean,
                 f90 = r.at(90).f1_mean;
    return {f8 - f1 >= 0.15 && std::abs(f90 - f30) <= 0.05 && secs < 900.0,
            fmt("F1(1)=%.4f F1(8)=%.4f F1(30)=%.4f F1(90)=%.4f; gain %.4f (need >= 0.15), "
                "plateau gap %.4f (need <= 0.05), %.0f s of 900",
                f1, f8, f30, f90, f8 - f1, std::abs(f90 - f30), secs)};
}

Outcome d1_robustness() {
    const auto all = run_sweep(DatasetKind::all, {90});
    const auto d1 = run_sweep(DatasetKind::dw, {90});
    const auto& pa = all.at(90);
    const auto& p1 = d1.at(90);
    return {p1.f1_mean >= pa.f1_mean - 0.01 && p1.V == 99 && pa.V == 900 && p1.V < pa.V,
            fmt("F1(D_1)=%.4f F1(D_All)=%.4f (need D_1 >= D_All - 0.01), V(D_1)=%zu V(D_All)=%zu",
                p1.f1_mean, pa.f1_mean, p1.V, pa.V)};
}

// 7 -------------------------------------------------------------------------

struct RandomCohort {
    std::vector<EventRecord> events;
    std::map<std::string, Label> labels;
    FeatureSchema schema;
};

RandomCohort random_cohort(rng::Engine& eng, bool continuous) {
    const std::size_t K = 1 + rng::bounded(eng, 3);
    const auto window = static_cast<Seconds>(5 + rng::bounded(eng, 500));
    std::vector<FeatureSpec> specs;
    for (std::size_t k = 0; k < K; ++k) {
        FeatureSpec spec;
        spec.name = "f" + std::to_string(k);
        spec.kind = continuous ? FeatureKind::continuous : FeatureKind::count;
        specs.push_back(spec);
    }
    RandomCohort rc{{}, {}, FeatureSchema(specs, window, std::string("anchor"))};
    const std::size_t N = 6 + rng::bounded(eng, 10);
    for (std::size_t n = 0; n < N; ++n) {
        const auto id = "q" + std::to_string(n);
        rc.labels[id] = n < 2 ? static_cast<Label>(n) : static_cast<Label>(rng::bounded(eng, 2));
        const auto t0 = static_cast<Timestamp>(rng::bounded(eng, 1000));
        rc.events.push_back({id, t0, "anchor", {}});
        for (std::size_t k = 0; k < K; ++k) {
            const auto events = rng::bounded(eng, 8);
            for (std::uint64_t e = 0; e < events; ++e) {
                // Some events land past the window and must be discarded.
                const auto t = t0 + static_cast<Timestamp>(rng::bounded(eng, static_cast<std::uint64_t>(window) + 20));
                EventValue value;
                if (continuous) value = std::round(rng::standard_normal(eng) * 1000.0) / 100.0;
                rc.events.push_back({id, t, specs[k].name, value});
            }
        }
    }
    return rc;
}

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

bool same_ranking(const TaibReport& a, const TaibReport& b, double tol) {
    if (a.features.size() != b.features.size()) return false;
    for (std::size_t i = 0; i < a.features.size(); ++i) {
        if (a.features[i].name != b.features[i].name) return false;
        if (!close(a.features[i].slope, b.features[i].slope, tol)) return false;
    }
    return true;
}

SequenceSet random_sequences(rng::Engine& eng, std::size_t count, std::size_t length) {
    SequenceSet s{count, length, {}};
    for (std::size_t i = 0; i < count * length; ++i) s.data.push_back(rng::standard_normal(eng));
    return s;
}

Outcome invariant_suite() {
    constexpr int kCases = 1000;
    auto eng = rng::make_engine(7, "acceptance-invariants");
    const ResolutionGrid grid({1, 2, 4, 7});
    std::vector<std::pair<std::string, int>> failures;
    auto suite = [&](const std::string& name, const std::function<bool()>& trial) {
        int failed = 0;
        for (int c = 0; c < kCases; ++c) failed += !trial();
        failures.emplace_back(name, failed);
    };

    suite("label-swap S", [&] {
        const std::size_t n = 2 + rng::bounded(eng, 12), len = 1 + rng::bounded(eng, 10);
        const auto s = random_sequences(eng, n, len);
        std::vector<Label> y(n), swapped(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < 2 ? static_cast<Label>(i) : static_cast<Label>(rng::bounded(eng, 2));
            swapped[i] = y[i] == Label::positive ? Label::negative : Label::positive;
        }
        return close(separation_score(s, y), separation_score(s, swapped), 1e-12);
    });

    suite("affine TAIB ranking", [&] {
        auto rc = random_cohort(eng, true);
        const auto base = build_cohort(rc.events, rc.schema, rc.labels).cohort;
        double a = 0.5 + 2.5 * rng::uniform01(eng);
        if (rng::bounded(eng, 2)) a = -a;
        const double b = 100.0 * rng::uniform01(eng) - 50.0;
        for (auto& e : rc.events) {
            if (auto* v = std::get_if<double>(&e.value)) *v = a * *v + b;
        }
        const auto moved = build_cohort(rc.events, rc.schema, rc.labels).cohort;
        return same_ranking(rank_features(base, grid, 1), rank_features(moved, grid, 1), 1e-9);
    });

    suite("person permutation", [&] {
        const auto rc = random_cohort(eng, rng::bounded(eng, 2) == 1);
        const auto cohort = build_cohort(rc.events, rc.schema, rc.labels).cohort;
        std::vector<std::size_t> order(cohort.size());
        std::iota(order.begin(), order.end(), 0);
        rng::shuffle(order.begin(), order.end(), eng);
        auto shuffled_events = rc.events;
        rng::shuffle(shuffled_events.begin(), shuffled_events.end(), eng);
        const auto reparsed = build_cohort(shuffled_events, rc.schema, rc.labels).cohort;
        const auto report = rank_features(cohort, grid, 1);
        return reparsed == cohort &&
               same_ranking(report, rank_features(cohort.subset(order), grid, 1), 1e-9);
    });

    suite("count conservation", [&] {
        const auto rc = random_cohort(eng, false);
        const auto build = build_cohort(rc.events, rc.schema, rc.labels);
        const std::size_t L = 1 + rng::bounded(eng, 60);
        for (const auto& spec : rc.schema.specs()) {
            const auto binned = bin_cohort_feature(build.cohort, spec.name, L);
            for (std::size_t p = 0; p < build.cohort.size(); ++p) {
                double total = 0.0;
                for (std::size_t i = 0; i < L; ++i) total += binned.cells[p * L + i].value_or(0.0);
                const auto expected = std::count_if(
                    build.cohort.persons[p].events.begin(), build.cohort.persons[p].events.end(),
                    [&](const EventRecord& e) { return e.feature == spec.name; });
                if (total != static_cast<double>(expected)) return false;
            }
        }
        return true;
    });

    suite("sparsity monotone in L", [&] {
        const auto rc = random_cohort(eng, rng::bounded(eng, 2) == 1);
        const auto cohort = build_cohort(rc.events, rc.schema, rc.labels).cohort;
        const std::size_t L = 1 + rng::bounded(eng, 10), m = 2 + rng::bounded(eng, 4);
        const double coarse = sparsity(build_feature_matrix(cohort, BinSpec::uniform(rc.schema, L)));
        const double fine = sparsity(build_feature_matrix(cohort, BinSpec::uniform(rc.schema, L * m)));
        return fine >= coarse - 1e-12;
    });

    suite("DTW symmetry/nonnegativity/diagonal", [&] {
        const std::size_t la = 1 + rng::bounded(eng, 10);
        const std::size_t lb = rng::bounded(eng, 2) ? la : 1 + rng::bounded(eng, 10);
        const auto s = random_sequences(eng, 2, std::max(la, lb));
        const std::span<const double> a = s.row(0).first(la), b = s.row(1).first(lb);
        const double ab = dtw::distance(a, b);
        bool ok = ab >= 0.0 && close(ab, dtw::distance(b, a), 1e-12) && dtw::distance(a, a) == 0.0;
        if (la == lb) {
            double diagonal = 0.0;
            for (std::size_t i = 0; i < la; ++i) diagonal += std::abs(a[i] - b[i]);
            ok = ok && ab <= diagonal + 1e-12;
        }
        return ok;
    });

    suite("OLS slope oracle", [&] {
        const std::size_t n = 2 + rng::bounded(eng, 11);
        std::vector<std::size_t> xs;
        std::size_t x = 0;
        for (std::size_t i = 0; i < n; ++i) xs.push_back(x += 1 + rng::bounded(eng, 10));
        std::vector<double> ys(n);
        for (auto& y : ys) y = 10.0 * rng::standard_normal(eng);
        long double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const long double xi = xs[i], yi = ys[i];
            sx += xi;
            sy += yi;
            sxx += xi * xi;
            sxy += xi * yi;
        }
        const long double ln = n;
        const double slope = static_cast<double>((ln * sxy - sx * sy) / (ln * sxx - sx * sx));
        const double intercept = static_cast<double>((sy - slope * sx) / ln);
        const auto fit = slope_fit(xs, ys);
        return close(fit.slope, slope, 1e-9) && close(fit.intercept, intercept, 1e-9);
    });

    suite("classifier gradient", [&] {
        const std::size_t n = 3 + rng::bounded(eng, 8), d = 1 + rng::bounded(eng, 5);
        DenseMatrix x{n, d, {}};
        for (std::size_t i = 0; i < n * d; ++i) x.data.push_back(rng::standard_normal(eng));
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < 2 ? static_cast<Label>(i) : static_cast<Label>(rng::bounded(eng, 2));
        }
        std::vector<double> w(d);
        for (auto& v : w) v = rng::standard_normal(eng);
        const double b = rng::standard_normal(eng), lambda = rng::uniform01(eng);
        const auto cw = class_weights(y);
        const auto g = loss_and_gradient(x, y, w, b, cw, lambda);
        const double h = 1e-5;
        auto agrees = [](double analytic, double numeric) {
            return std::abs(analytic - numeric) <= 1e-5 * std::max(std::abs(numeric), 1e-3);
        };
        for (std::size_t j = 0; j < d; ++j) {
            auto up = w, down = w;
            up[j] += h;
            down[j] -= h;
            const double fd = (loss_and_gradient(x, y, up, b, cw, lambda).loss -
                               loss_and_gradient(x, y, down, b, cw, lambda).loss) / (2 * h);
            if (!agrees(g.weights[j], fd)) return false;
        }
        const double fd_b = (loss_and_gradient(x, y, w, b + h, cw, lambda).loss -
                             loss_and_gradient(x, y, w, b - h, cw, lambda).loss) / (2 * h);
        return agrees(g.bias, fd_b);
    });

    bool ok = true;
    std::string detail = fmt("%d cases each;", kCases);
    for (const auto& [name, failed] : failures) {
        ok = ok && failed == 0;
        detail += fmt(" %s %d failed;", name.c_str(), failed);
    }
    return {ok, detail};
}

// 8 -------------------------------------------------------------------------

int cli(std::vector<std::string> args, std::string* stdout_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (stdout_text) *stdout_text = out.str();
    if (code != 0) std::fprintf(stderr, "cli %s failed: %s", args[0].c_str(), err.str().c_str());
    return code;
}

Outcome cli_determinism() {
    const auto root = fs::temp_directory_path() / "taib_acceptance_cli";
    fs::remove_all(root);
    std::vector<std::string> mismatched;
    std::size_t compared = 0;

    const std::vector<std::string> gen_args{"--persons", "150", "--noise", "3", "--drift",
                                            "--seed", "13", "--window", "30d"};
    std::map<std::string, std::string> reference;
    const char* thread_counts[] = {"1", "2", "5"};
    for (int v = 0; v < 3; ++v) {
        const auto dir = root / ("run" + std::to_string(v));
        const auto d = dir.string();
        fs::create_directories(dir);
        auto with = [&](std::vector<std::string> args, const std::vector<std::string>& tail) {
            args.insert(args.end(), tail.begin(), tail.end());
            return args;
        };
        std::vector<std::string> gen{"gen", "--out-dir", d};
        if (cli(with(gen, gen_args)) != 0) return {false, "gen failed"};
        const std::vector<std::string> in{"--events", d + "/events.csv", "--labels",
                                          d + "/labels.csv", "--schema", d + "/schema.json"};
        const std::string threads = thread_counts[v];
        std::string check_out;
        int rc = cli(with({"check", "--json"}, in), &check_out);
        rc |= cli(with({"rank", "--out-dir", d, "--grid", "1,2,5,9", "--threads", threads}, in));
        rc |= cli(with({"mi", "--out-dir", d}, in));
        rc |= cli(with({"build", "--out-dir", d, "--report", d + "/taib_report.json", "--w", "2",
                        "--L", "6", "--threads", threads},
                       in));
        rc |= cli(with({"sweep", "--out-dir", d, "--dataset", "dw", "--w", "1", "--grid", "1,3,6",
                        "--taib-grid", "1,4", "--runs", "3", "--epochs", "200", "--seed", "4",
                        "--threads", threads},
                       in));
        if (rc != 0) return {false, "a CLI command failed"};

        std::map<std::string, std::string> files;
        files["check.stdout"] = check_out;
        for (const auto& entry : fs::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            // Manifests hold wall-clock fields; everything else is data.
            if (name.find("manifest") != std::string::npos) continue;
            files[name] = io::read_file(entry.path().string());
        }
        if (v == 0) {
            reference = files;
            continue;
        }
        for (const auto& [name, text] : reference) {
            ++compared;
            auto copy = files.find(name);
            // Paths embedded in outputs differ by run directory only.
            std::string expected = text, actual = copy == files.end() ? "" : copy->second;
            const auto ref_dir = (root / "run0").string();
            for (std::size_t pos; (pos = expected.find(ref_dir)) != std::string::npos;) {
                expected.replace(pos, ref_dir.size(), d);
            }
            if (copy == files.end() || actual != expected) mismatched.push_back(name);
        }
    }
    std::string detail = fmt("%zu output comparisons across --threads 1/2/5", compared);
    std::sort(mismatched.begin(), mismatched.end());
    mismatched.erase(std::unique(mismatched.begin(), mismatched.end()), mismatched.end());
    for (const auto& m : mismatched) detail += "; differs: " + m;
    fs::remove_all(root);
    return {mismatched.empty() && compared > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::fprintf(stderr, "usage: acceptance [--only N]\n");
            return 2;
        }
    }
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"DTW oracle equivalence", dtw_oracle_equivalence},
        {"column-count arithmetic", column_counts},
        {"TAIB detects temporal signal", taib_detects_signal},
        {"F1-vs-L shape on D_All", f1_shape},
        {"D_1 robustness at L=90", d1_robustness},
        {"TAIB/MI divergence", taib_mi_divergence},
        {"algebraic invariant suite", invariant_suite},
        {"CLI determinism across --threads", cli_determinism},
    };
    if (only < 0 || only > static_cast<int>(criteria.size())) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<int>(i + 1) != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] criterion %zu: %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, o.detail.c_str(), secs);
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
