#include <benchmark/benchmark.h>

#include "attrscope/dataset.hpp"
#include "attrscope/glyph.hpp"
#include "attrscope/metrics.hpp"

namespace {

attrscope::Dataset synthetic(std::int64_t n) {
    attrscope::SyntheticParams p;
    p.n = static_cast<std::size_t>(n);
    p.d = 8;
    return attrscope::generate_synthetic(p);
}

void BM_Confusion(benchmark::State& state) {
    const auto ds = synthetic(state.range(0));
    const auto all = attrscope::all_attributes(ds);
    for (auto _ : state) benchmark::DoNotOptimize(attrscope::confusion(ds.records(), all, 0.5));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Confusion)->Arg(1000)->Arg(100000);

void BM_MeanAveragePrecision(benchmark::State& state) {
    const auto ds = synthetic(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(attrscope::mean_average_precision(ds));
}
BENCHMARK(BM_MeanAveragePrecision)->Arg(1000)->Arg(100000);

void BM_LayoutFlowers(benchmark::State& state) {
    const auto ds = synthetic(state.range(0));
    const attrscope::Matrix coords(ds.size(), 2);
    const auto all = attrscope::all_attributes(ds);
    for (auto _ : state) benchmark::DoNotOptimize(attrscope::layout_flowers(ds, coords, all, {}));
}
BENCHMARK(BM_LayoutFlowers)->Arg(1000)->Arg(10000);

} // namespace
