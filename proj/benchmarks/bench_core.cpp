#include <benchmark/benchmark.h>

#include "benchhedge/distributions.hpp"
#include "benchhedge/models.hpp"
#include "benchhedge/pricing.hpp"
#include "benchhedge/rng.hpp"
#include "benchhedge/stochastic_core.hpp"

using namespace benchhedge;

static void BM_NcxCdf(benchmark::State& state) {
    double x = 0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ncx2_cdf(x, {4.0, 6.2}));
        x += 0.1;
        if (x > 40.0) x = 0.5;
    }
}
BENCHMARK(BM_NcxCdf);

static void BM_BesqExactStep(benchmark::State& state) {
    RngStream stream(1, 0);
    double z = 1.0;
    for (auto _ : state) {
        z = besq_exact_step(z, 4.0, 0.05, stream);
        benchmark::DoNotOptimize(z);
    }
}
BENCHMARK(BM_BesqExactStep);

static void BM_SimulateStylized(benchmark::State& state) {
    StylizedMmmParams params;
    params.alpha0 = 0.05;
    params.beta = 0.05;
    params.z0 = 1.0;
    const TimeGrid grid = make_time_grid(0.0, 10.0, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_stylized_mmm(params, grid, 1000, 42));
    }
    state.SetItemsProcessed(state.iterations() * 1000 * state.range(0));
}
BENCHMARK(BM_SimulateStylized)->Arg(32)->Arg(256);

static void BM_PutClosedForm(benchmark::State& state) {
    StylizedMmmParams params;
    params.alpha0 = 0.05;
    params.beta = 0.05;
    params.z0 = 1.0;
    double k = 0.25;
    for (auto _ : state) {
        benchmark::DoNotOptimize(put_price(0.0, k, 1.0, params, 10.0));
        k += 0.25;
        if (k > 5.0) k = 0.25;
    }
}
BENCHMARK(BM_PutClosedForm);

BENCHMARK_MAIN();
