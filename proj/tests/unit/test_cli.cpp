#include <filesystem>
#include <sstream>

#include "commands.hpp"
#include "doctest.h"
#include "taib/io_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = taib::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("taib_cli_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> inputs(const fs::path& dir) {
    return {"--events", (dir / "events.csv").string(), "--labels", (dir / "labels.csv").string(),
            "--schema", (dir / "schema.json").string()};
}

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string slurp(const fs::path& p) { return taib::io::read_file(p.string()); }

const fs::path& cohort_dir() {
    static const fs::path dir = [] {
        auto d = scratch("cohort");
        const auto r = run({"gen", "--out-dir", d.string(), "--persons", "80", "--noise", "2",
                            "--seed", "5", "--window", "30d"});
        REQUIRE(r.code == 0);
        return d;
    }();
    return dir;
}

}  // namespace

TEST_CASE("cli: gen writes inputs and a manifest") {
    const auto& d = cohort_dir();
    for (const char* f : {"events.csv", "labels.csv", "schema.json", "manifest.json"}) {
        CHECK(fs::exists(d / f));
    }
    CHECK(slurp(d / "events.csv").rfind("person_id,timestamp,feature,value\n", 0) == 0);
    const auto manifest = slurp(d / "manifest.json");
    CHECK(manifest.find("\"command\"") != std::string::npos);
    CHECK(manifest.find("\"random_streams\"") != std::string::npos);

    auto again = scratch("gen_again");
    REQUIRE(run({"gen", "--out-dir", again.string(), "--persons", "80", "--noise", "2", "--seed",
                 "5", "--window", "30d"})
                .code == 0);
    CHECK(slurp(again / "events.csv") == slurp(d / "events.csv"));
    CHECK(slurp(again / "labels.csv") == slurp(d / "labels.csv"));
}

TEST_CASE("cli: check summarizes the cohort") {
    const auto r = run(cat({"check", "--json"}, inputs(cohort_dir())));
    CHECK(r.code == 0);
    CHECK(r.out.find("80") != std::string::npos);
}

TEST_CASE("cli: exit codes") {
    CHECK(run({"rank", "--bogus"}).code == 2);
    CHECK(run({}).code == 2);
    CHECK(run({"check", "--events", "/nonexistent/e.csv", "--labels", "x", "--schema", "y"}).code == 1);
    const auto bad = run(cat({"check", "--format", "xml"}, inputs(cohort_dir())));
    CHECK(bad.code == 2);
    const auto out = scratch("exit_build");
    CHECK(run(cat({"build", "--out-dir", out.string(), "--L", "3", "--w", "1"}, inputs(cohort_dir())))
              .code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: rank, mi, build and sweep are reproducible across thread counts") {
    const auto in = inputs(cohort_dir());
    std::string previous[6];
    for (const char* threads : {"1", "3"}) {
        const auto out = scratch(std::string("pipeline_") + threads);
        const auto o = out.string();
        REQUIRE(run(cat({"rank", "--out-dir", o, "--grid", "1,3,6", "--threads", threads}, in)).code == 0);
        REQUIRE(run(cat({"mi", "--out-dir", o}, in)).code == 0);
        REQUIRE(run(cat({"build", "--out-dir", o, "--report", (out / "taib_report.json").string(),
                         "--w", "1", "--L", "4", "--threads", threads},
                        in))
                    .code == 0);
        REQUIRE(run(cat({"sweep", "--out-dir", o, "--dataset", "dw", "--grid", "1,2", "--taib-grid",
                         "1,3", "--runs", "2", "--epochs", "50", "--threads", threads},
                        in))
                    .code == 0);
        const std::string files[6] = {slurp(out / "taib_report.json"), slurp(out / "mi_report.csv"),
                                      slurp(out / "feature_matrix.csv"),
                                      slurp(out / "feature_matrix.json"), slurp(out / "sweep.csv"),
                                      slurp(out / "sweep.json")};
        for (int i = 0; i < 6; ++i) {
            CHECK_FALSE(files[i].empty());
            if (!previous[i].empty()) CHECK(files[i] == previous[i]);
            previous[i] = files[i];
        }
    }
}

TEST_CASE("cli: build with w = K equals the uniform build") {
    const auto in = inputs(cohort_dir());
    const auto a = scratch("build_dall");
    const auto b = scratch("build_uniform");
    REQUIRE(run(cat({"rank", "--out-dir", a.string(), "--grid", "1,3"}, in)).code == 0);
    REQUIRE(run(cat({"build", "--out-dir", a.string(), "--report", (a / "taib_report.json").string(),
                     "--w", "3", "--L", "5"},
                    in))
                .code == 0);
    REQUIRE(run(cat({"build", "--out-dir", b.string(), "--L", "5"}, in)).code == 0);
    CHECK(slurp(a / "feature_matrix.csv") == slurp(b / "feature_matrix.csv"));
    const auto header = slurp(b / "feature_matrix.csv").substr(0, 40);
    CHECK(header.rfind("person_id,label,signal_0__b0_of_5,", 0) == 0);
}
