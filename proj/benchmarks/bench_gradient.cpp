#include <random>

#include <benchmark/benchmark.h>

#include "attrscope/affinity.hpp"
#include "attrscope/tsne.hpp"

namespace {

using attrscope::Matrix;

Matrix gaussian(std::size_t n, std::size_t m, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    Matrix x(n, m);
    for (auto& v : x.data()) v = d(gen);
    return x;
}

void BM_ExactGradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = attrscope::pairwise_affinities(gaussian(n, 10, 1), 30.0);
    const auto y = gaussian(n, 2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(attrscope::tsne_gradient(p, y));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ExactGradient)->RangeMultiplier(2)->Range(128, 2048)->Complexity(benchmark::oNSquared);

void BM_BarnesHutGradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto p = attrscope::sparse_affinities(gaussian(n, 10, 1), 30.0, 90);
    const auto y = gaussian(n, 2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(attrscope::bh_gradient(p, y, 0.5));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BarnesHutGradient)->RangeMultiplier(2)->Range(128, 8192)->Complexity(benchmark::oNLogN);

void BM_SparseAffinities(benchmark::State& state) {
    const auto x = gaussian(static_cast<std::size_t>(state.range(0)), 50, 3);
    for (auto _ : state) benchmark::DoNotOptimize(attrscope::sparse_affinities(x, 30.0, 90));
}
BENCHMARK(BM_SparseAffinities)->Arg(1000)->Arg(4000);

} // namespace
