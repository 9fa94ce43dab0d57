#include "anchortest/cluster.hpp"
#include "anchortest/divergence.hpp"
#include "anchortest/preprocess.hpp"
#include "anchortest/stattests.hpp"
#include "anchortest/synth.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace anchortest;

namespace {

Matrix gaussian(long rows, long cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) m(i, j) = normal(gen);
    }
    return m;
}

std::vector<double> sample(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.1, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = normal(gen);
    return v;
}

void BM_JohnsonT(benchmark::State& state) {
    const auto d = sample(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(johnson_t(d));
}
BENCHMARK(BM_JohnsonT)->Arg(300)->Arg(3000);

void BM_SignFlip(benchmark::State& state) {
    const DiffVector d{sample(static_cast<std::size_t>(state.range(0)), 2)};
    PermutationConfig cfg;
    cfg.replicates = 999;
    for (auto _ : state) benchmark::DoNotOptimize(sign_flip_pvalue(d, cfg).p_value);
}
BENCHMARK(BM_SignFlip)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
    const Matrix pts = gaussian(state.range(0), 10, 3);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, 4, 7).wcss);
}
BENCHMARK(BM_KMeans)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

void BM_Energy(benchmark::State& state) {
    const Matrix x = gaussian(state.range(0), 10, 4);
    const Matrix y = gaussian(state.range(0), 10, 5);
    PermutationConfig cfg;
    cfg.replicates = 199;
    for (auto _ : state) benchmark::DoNotOptimize(energy_test(x, y, cfg).p_value);
}
BENCHMARK(BM_Energy)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_PcaWide(benchmark::State& state) {
    const Matrix wide = gaussian(state.range(0), 1536, 6);
    for (auto _ : state) benchmark::DoNotOptimize(fit_pca(wide, 10).explained_variance(0));
}
BENCHMARK(BM_PcaWide)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Wasserstein(benchmark::State& state) {
    const auto a = sample(static_cast<std::size_t>(state.range(0)), 7);
    const auto b = sample(static_cast<std::size_t>(state.range(0)), 8);
    for (auto _ : state) benchmark::DoNotOptimize(wasserstein1(a, b));
}
BENCHMARK(BM_Wasserstein)->Arg(300)->Arg(30000);

void BM_AnchoredTest(benchmark::State& state) {
    ScenarioConfig cfg;
    cfg.structure = Structure::independent;
    const auto t = generate_alt_triple(cfg);
    AnchoredConfig test;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            anchored_test(t.data.at("anchor"), t.data.at("nonanchor_1"), t.data.at("nonanchor_2"), test).p_value);
    }
}
BENCHMARK(BM_AnchoredTest)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
