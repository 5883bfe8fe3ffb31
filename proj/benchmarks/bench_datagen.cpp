#include <benchmark/benchmark.h>

#include "nnsa/datagen.hpp"

namespace {

using namespace nnsa;

void BM_Generate(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const DataModelSpec spec = DataModelSpec::rect(m, n, 5, 40.0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        Instance inst = generate(spec, seed++);
        benchmark::DoNotOptimize(inst.y.data());
    }
}
BENCHMARK(BM_Generate)->Args({50, 200})->Args({200, 200})->Unit(benchmark::kMicrosecond);

void BM_Prune(benchmark::State& state) {
    const Instance inst = generate(DataModelSpec::rect(200, 200, 5, 40.0), 3);
    for (auto _ : state) {
        RealMatrix pruned = prune(inst.a, 0.5);
        benchmark::DoNotOptimize(pruned.data());
    }
}
BENCHMARK(BM_Prune)->Unit(benchmark::kMicrosecond);

}  // namespace
