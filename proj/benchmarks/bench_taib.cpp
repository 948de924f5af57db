#include <benchmark/benchmark.h>

#include "taib/binning.hpp"
#include "taib/dtw.hpp"
#include "taib/random.hpp"
#include "taib/ranking.hpp"
#include "taib/syndata.hpp"

using namespace taib;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
    auto eng = rng::Engine(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng::standard_normal(eng);
    return v;
}

const Cohort& cohort() {
    static const Cohort c = [] {
        syndata::GeneratorConfig cfg;
        cfg.persons = 1000;
        const auto gen = syndata::generate(cfg);
        return build_cohort(gen.events, gen.schema, gen.labels).cohort;
    }();
    return c;
}

}  // namespace

static void BM_DtwFull(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = noise(n, 1), b = noise(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(dtw::distance(a, b));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwFull)->Arg(8)->Arg(30)->Arg(90)->Arg(256)->Complexity();

static void BM_DtwBanded(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = noise(n, 1), b = noise(n, 2);
    const auto radius = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(dtw::distance_banded(a, b, radius));
}
BENCHMARK(BM_DtwBanded)->Args({90, 5})->Args({90, 20})->Args({256, 10});

static void BM_SeparationScore(benchmark::State& state) {
    const auto L = static_cast<std::size_t>(state.range(0));
    const auto set = znormalize(bin_cohort_feature(cohort(), syndata::signal_name(0), L));
    const auto labels = cohort().labels();
    for (auto _ : state) benchmark::DoNotOptimize(separation_score(set, labels));
}
BENCHMARK(BM_SeparationScore)->Arg(1)->Arg(12)->Arg(90)->Unit(benchmark::kMillisecond);

static void BM_FeatureMatrix(benchmark::State& state) {
    const auto spec = BinSpec::uniform(cohort().schema, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(build_feature_matrix(cohort(), spec));
}
BENCHMARK(BM_FeatureMatrix)->Arg(1)->Arg(90)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
