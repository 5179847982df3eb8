#include "pspin/ground_state.hpp"
#include "pspin/thermo.hpp"

#include <benchmark/benchmark.h>

using namespace pspin;

namespace {

HamiltonianInstance mixed_instance(std::size_t n) {
    return build_instance(Mixture(1, {{{2}, 1.0}, {{3}, 0.5}}), share(SpeciesLayout::single(n)), 1);
}

void BM_Energy(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const HamiltonianInstance h = mixed_instance(n);
    Rng rng(2);
    const Configuration sigma = sample_uniform(h.layout_ptr(), rng);
    for (auto _ : state) benchmark::DoNotOptimize(h.energy(sigma));
}
BENCHMARK(BM_Energy)->Arg(16)->Arg(32)->Arg(64);

void BM_Gradient(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const HamiltonianInstance h = mixed_instance(n);
    Rng rng(3);
    const Configuration sigma = sample_uniform(h.layout_ptr(), rng);
    for (auto _ : state) benchmark::DoNotOptimize(h.gradient(sigma));
}
BENCHMARK(BM_Gradient)->Arg(16)->Arg(32)->Arg(64);

void BM_CovarianceRealize(benchmark::State& state) {
    const auto points = static_cast<std::size_t>(state.range(0));
    const auto layout = share(SpeciesLayout::from_sizes({8, 8}));
    const Mixture xi(2, {{{1, 1}, 1.0}, {{2, 1}, 0.5}});
    Rng rng(4);
    std::vector<Configuration> xs;
    for (std::size_t k = 0; k < points; ++k) xs.push_back(sample_uniform(layout, rng));
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(realize_on_points(xi, *layout, xs, ++seed));
}
BENCHMARK(BM_CovarianceRealize)->Arg(8)->Arg(64);

void BM_ThermoIntegration(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const HamiltonianInstance h =
        build_instance(Mixture(2, {{{1, 1}, 1.0}}), share(SpeciesLayout::from_sizes({n / 2, n / 2})), 5);
    const auto grid = uniform_beta_grid(1.0, 21);
    SamplerConfig config;
    config.burn_in = 200;
    config.sweeps = 800;
    Rng rng(6);
    for (auto _ : state) benchmark::DoNotOptimize(fe_thermo_integration(h, grid, config, rng).value);
}
BENCHMARK(BM_ThermoIntegration)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Ascend(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const HamiltonianInstance h = mixed_instance(n);
    AscentOptions options;
    options.restarts = 8;
    Rng rng(7);
    for (auto _ : state) benchmark::DoNotOptimize(ascend(h, OverlapVector{0.9}, options, rng).energy_per_spin);
}
BENCHMARK(BM_Ascend)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EigenOracle(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const HamiltonianInstance h = build_instance(Mixture(1, {{{2}, 1.0}}), share(SpeciesLayout::single(n)), 8);
    for (auto _ : state) benchmark::DoNotOptimize(eigen_oracle_2spin(h, OverlapVector{0.5}));
}
BENCHMARK(BM_EigenOracle)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_CornerEnumeration(benchmark::State& state) {
    const auto species = static_cast<std::size_t>(state.range(0));
    Mixture::Terms terms;
    for (std::size_t a = 0; a + 1 < species; ++a) {
        MultiDegree p(species, 0);
        p[a] = p[a + 1] = 1;
        terms[p] = 1.0;
    }
    const HamiltonianInstance h =
        build_instance(Mixture(species, terms), share(SpeciesLayout::from_sizes(std::vector<std::size_t>(species, 1))), 9);
    for (auto _ : state) benchmark::DoNotOptimize(exact_fe_enumeration(h).value);
}
BENCHMARK(BM_CornerEnumeration)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
