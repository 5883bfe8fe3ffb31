#include <benchmark/benchmark.h>

#include "nnsa/boxdyn.hpp"
#include "nnsa/datagen.hpp"
#include "nnsa/dynsys.hpp"
#include "nnsa/solvers.hpp"

namespace {

using namespace nnsa;

Instance instance_for(std::size_t m, std::size_t n) {
    return generate(DataModelSpec::rect(m, n, std::max<std::size_t>(1, n / 10), 40.0), 17);
}

void BM_DynSolve(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const Instance inst = instance_for(m, n);
    const DiscSystem sys = DiscSystem::build(inst.a, inst.y);
    for (auto _ : state) {
        auto [res, traj] = solve(sys, RealVector(n, 0.0), {});
        benchmark::DoNotOptimize(res.kkt_residual);
    }
}
BENCHMARK(BM_DynSolve)->Args({20, 10})->Args({50, 50})->Args({25, 100})
    ->Unit(benchmark::kMillisecond);

void BM_ActiveSetNnls(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const auto n = static_cast<std::size_t>(state.range(1));
    const Instance inst = instance_for(m, n);
    for (auto _ : state) {
        auto res = nnls_active_set(inst.a, inst.y, 1e-10);
        benchmark::DoNotOptimize(res.x_eq.data());
    }
}
BENCHMARK(BM_ActiveSetNnls)->Args({20, 10})->Args({50, 50})->Unit(benchmark::kMicrosecond);

void BM_NnbpdnPath(benchmark::State& state) {
    const auto n_alphas = static_cast<std::size_t>(state.range(0));
    const Instance inst = instance_for(25, 100);
    for (auto _ : state) {
        auto path = nnbpdn_path(inst.a, inst.y, n_alphas);
        benchmark::DoNotOptimize(path.solutions.back().data());
    }
}
BENCHMARK(BM_NnbpdnPath)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_BoxSolve(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Instance inst = instance_for(n + 5, n);
    const BoxSystem sys = BoxSystem::from_least_squares(inst.a, inst.y, RealVector(n, 0.0),
                                                        RealVector(n, 2.0));
    for (auto _ : state) {
        auto res = box_solve(sys, RealVector(n, 0.0), {});
        benchmark::DoNotOptimize(res.kkt_residual);
    }
}
BENCHMARK(BM_BoxSolve)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
