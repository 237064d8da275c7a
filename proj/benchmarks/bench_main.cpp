#include <benchmark/benchmark.h>

#include "speclab/control.hpp"
#include "speclab/model.hpp"
#include "speclab/numerics.hpp"
#include "speclab/sensors.hpp"
#include "speclab/specineq.hpp"

using namespace speclab;

namespace {

model::Eigensystem harmonic(double lambda_max, double half_width, std::size_t n) {
    const model::Grid grid = model::Grid::make(1, half_width, n);
    return eigendecompose(assemble(grid, model::PotentialSpec::power_law(2.0)), lambda_max);
}

void bm_tridiag_eigh(benchmark::State& state) {
    const std::size_t n = state.range(0);
    numerics::SymTridiag t;
    t.diag.assign(n, 2.0);
    t.offdiag.assign(n - 1, -1.0);
    for (auto _ : state) benchmark::DoNotOptimize(numerics::tridiag_eigh(t));
}
BENCHMARK(bm_tridiag_eigh)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void bm_eigendecompose_1d(benchmark::State& state) {
    const std::size_t n = state.range(0);
    const model::Grid grid = model::Grid::make(1, 20.0, n);
    const model::Hamiltonian ham = assemble(grid, model::PotentialSpec::power_law(2.0));
    for (auto _ : state) benchmark::DoNotOptimize(eigendecompose(ham, 60.0));
}
BENCHMARK(bm_eigendecompose_1d)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void bm_lanczos_2d(benchmark::State& state) {
    const std::size_t n = state.range(0);
    const model::Grid grid = model::Grid::make(2, 7.0, n);
    const model::Hamiltonian ham = assemble(grid, model::PotentialSpec::anisotropic(2.0, 1));
    for (auto _ : state)
        benchmark::DoNotOptimize(numerics::lanczos_smallest(ham.sparse(), 12, 3));
}
BENCHMARK(bm_lanczos_2d)->Arg(40)->Arg(60)->Unit(benchmark::kMillisecond);

void bm_mask_realize(benchmark::State& state) {
    const model::Grid grid = model::Grid::make(1, 20.0, state.range(0));
    const sensors::SensorSpec spec = sensors::SensorSpec::equidistributed(0.2, 0.5);
    for (auto _ : state) benchmark::DoNotOptimize(sensors::realize(spec, grid));
}
BENCHMARK(bm_mask_realize)->Arg(4000)->Unit(benchmark::kMillisecond);

void bm_gram(benchmark::State& state) {
    static const model::Eigensystem sys = harmonic(41.0, 16.0, 3000);
    const model::SpectralSubspace sub = model::subspace(sys, 41.0);
    const sensors::SensorMask mask =
        sensors::realize(sensors::SensorSpec::equidistributed(0.2, 0.0), sys.grid());
    for (auto _ : state) benchmark::DoNotOptimize(specineq::gram(sub, mask));
}
BENCHMARK(bm_gram)->Unit(benchmark::kMillisecond);

void bm_estimate_cobs(benchmark::State& state) {
    static const model::Eigensystem sys = harmonic(25.0, 12.0, 1500);
    const sensors::SensorMask mask =
        sensors::realize(sensors::SensorSpec::equidistributed(0.25, 0.0), sys.grid());
    for (auto _ : state)
        benchmark::DoNotOptimize(control::estimate_cobs(sys, mask, 0.5, 25.0));
}
BENCHMARK(bm_estimate_cobs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
