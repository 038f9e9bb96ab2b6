// Serial reference kernels against their OpenMP counterparts.
// OpenMP cases report wall time; the second Arg is the thread count.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "mkv/engine.hpp"
#include "mkv/kernels.hpp"
#include "mkv/model.hpp"

using namespace mkv;

namespace {

std::vector<double> cloud_states(std::size_t n) {
    return initial_cloud(builtin_example_1(), n, 11).states;
}

void BM_min_step_serial(benchmark::State& state) {
    const auto x = cloud_states(state.range(0));
    const EmpiricalMeasure mu(x, 1);
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 256, example1_h());
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::min_step(x, 1, mu, policy));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_min_step_omp(benchmark::State& state) {
    const auto x = cloud_states(state.range(0));
    const EmpiricalMeasure mu(x, 1);
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 256, example1_h());
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::omp::min_step(x, 1, mu, policy, threads));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_em_update_serial(benchmark::State& state) {
    const auto model = builtin_example_1();
    auto x = cloud_states(state.range(0));
    const EmpiricalMeasure mu(x, 1);
    const std::vector<double> dW(x.size(), 0.01), dW0{0.01};
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::serial::em_update(x, model, mu, 1e-4, dW, dW0,
                                                            kernels::DriftForm::plain));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_em_update_omp(benchmark::State& state) {
    const auto model = builtin_example_1();
    auto x = cloud_states(state.range(0));
    const EmpiricalMeasure mu(x, 1);
    const std::vector<double> dW(x.size(), 0.01), dW0{0.01};
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernels::omp::em_update(x, model, mu, 1e-4, dW, dW0,
                                                         kernels::DriftForm::plain, threads));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

const std::vector<double> kBreakpoints{0.0, 0.01, 0.013, 0.02, 0.031, 0.04};

void BM_brownian_sums_serial(benchmark::State& state) {
    const NoiseDriver driver(5, state.range(0), 1, 1);
    std::vector<double> out(state.range(0));
    for (auto _ : state) {
        kernels::serial::brownian_sums(driver, kBreakpoints, 0, 5, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_brownian_sums_omp(benchmark::State& state) {
    const NoiseDriver driver(5, state.range(0), 1, 1);
    std::vector<double> out(state.range(0));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) {
        kernels::omp::brownian_sums(driver, kBreakpoints, 0, 5, out, threads);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_simulate(benchmark::State& state) {
    const auto model = builtin_example_1();
    const auto policy = TimestepPolicy::finite(1.0, 1.0 / 64, example1_h());
    EngineOptions options;
    if (state.range(1) > 0) options.exec = Exec{Backend::parallel, static_cast<int>(state.range(1))};
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate(model, policy, state.range(0), 1.0, 3, {}, options));
    }
}

void thread_args(benchmark::internal::Benchmark* b) {
    for (long n : {1000L, 100000L})
        for (long t : {1L, 2L, 4L}) b->Args({n, t});
    b->UseRealTime();
}

}  // namespace

BENCHMARK(BM_min_step_serial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_min_step_omp)->Apply(thread_args);
BENCHMARK(BM_em_update_serial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_em_update_omp)->Apply(thread_args);
BENCHMARK(BM_brownian_sums_serial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_brownian_sums_omp)->Apply(thread_args);
// second argument: 0 = serial backend, otherwise OpenMP thread count
BENCHMARK(BM_simulate)->Args({1000, 0})->Args({1000, 2})->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
