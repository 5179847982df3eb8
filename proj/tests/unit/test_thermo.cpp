#include "pspin/thermo.hpp"

#include <doctest.h>

#include <cmath>

using namespace pspin;

namespace {

SamplerConfig quick(std::size_t sweeps = 4000) {
    SamplerConfig cfg;
    cfg.burn_in = 500;
    cfg.sweeps = sweeps;
    cfg.thin = 10;
    return cfg;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// Linear H(sigma) = a . sigma on one block of size n_s: log of the mean of
// exp(a . sigma) over the sphere of radius sqrt(n_s).
double log_linear_mean(std::size_t n_s, double a) {
    const double r = std::sqrt(static_cast<double>(n_s)) * a;
    if (n_s == 1) return std::log(std::cosh(r));
    if (n_s == 2) return std::log(std::cyl_bessel_i(0.0, r));
    return std::log(std::sinh(r) / r);
}

std::span<const double> block(std::span<const double> v, const SpeciesLayout& layout, std::size_t s) {
    return v.subspan(layout.offset(s), layout.size(s));
}

Mixture corner_mixture() { return Mixture(3, {{{1, 0, 0}, 0.3}, {{1, 1, 0}, 1.0}, {{0, 1, 1}, 0.6}, {{1, 1, 1}, 0.4}}); }

} // namespace

TEST_CASE("enumeration examples") {
    const auto one = share(SpeciesLayout::single(1));
    CHECK(exact_fe_enumeration(build_instance(Mixture(1), one, 1)).value == 0.0);

    const HamiltonianInstance sq = build_instance(Mixture(1, {{{2}, 1.0}}), one, 4);
    const std::vector<double> up{1.0};
    const auto est = exact_fe_enumeration(sq);
    CHECK(est.value == doctest::Approx(sq.energy(up)).epsilon(1e-13));
    CHECK(est.std_error == 0.0);
    CHECK(est.method == Method::enumeration);

    const auto two = share(SpeciesLayout::from_sizes({1, 1}));
    const HamiltonianInstance ab = build_instance(Mixture(2, {{{1, 1}, 1.0}}), two, 6);
    const std::vector<double> pp{1.0, 1.0};
    const double g = ab.energy(pp);
    CHECK(exact_fe_enumeration(ab).value == doctest::Approx(std::log(std::cosh(g)) / 2).epsilon(1e-13));

    CHECK_THROWS_AS(exact_fe_enumeration(build_instance(Mixture(1, {{{2}, 1.0}}), share(SpeciesLayout::single(2)), 1)),
                    std::invalid_argument);
}

TEST_CASE("quadrature matches closed forms for linear fields") {
    const auto layout = share(SpeciesLayout::from_sizes({2, 3, 1}));
    const HamiltonianInstance h = build_instance(Mixture(3, {{{1, 0, 0}, 0.8}, {{0, 1, 0}, 0.5}, {{0, 0, 1}, 0.3}}), layout, 12);
    const std::vector<double> zero(6, 0.0);
    const auto grad = h.gradient(zero);
    double expected = 0.0;
    for (std::size_t s = 0; s < 3; ++s) expected += log_linear_mean(layout->size(s), norm(block(grad, *layout, s)));
    expected /= 6.0;
    const auto est = exact_fe_quadrature(h, 8, 1e-13);
    CHECK_FALSE(est.flagged("not_converged"));
    CHECK(est.value == doctest::Approx(expected).epsilon(1e-11));
    CHECK(est.method == Method::quadrature);
}

TEST_CASE("quadrature trivia and self-convergence") {
    const auto circles = share(SpeciesLayout::from_sizes({2, 2}));
    CHECK(exact_fe_quadrature(build_instance(Mixture(2), circles, 1), 4).value == doctest::Approx(0.0).epsilon(1e-15));

    const HamiltonianInstance h = build_instance(Mixture(2, {{{1, 1}, 1.0}, {{2, 0}, 0.5}, {{0, 1}, 0.3}}), circles, 2);
    const double coarse = exact_fe_quadrature(h, 16, 1e-12).value;
    const double fine = exact_fe_quadrature(h, 128, 1e-12).value;
    CHECK(std::abs(coarse - fine) < 1e-8);

    const auto corners = share(SpeciesLayout::from_sizes({1, 1, 1}));
    const HamiltonianInstance c = build_instance(corner_mixture(), corners, 3);
    CHECK(exact_fe_quadrature(c).value == doctest::Approx(exact_fe_enumeration(c).value).epsilon(1e-13));

    CHECK_THROWS_AS(exact_fe_quadrature(build_instance(Mixture(1), share(SpeciesLayout::single(4)), 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(exact_fe_quadrature(build_instance(Mixture(4), share(SpeciesLayout::from_sizes({3, 3, 3, 2})), 1)),
                    std::invalid_argument);
}

TEST_CASE("pt sampler at infinite and high temperature") {
    const auto layout = share(SpeciesLayout::single(20));
    const HamiltonianInstance h = build_instance(Mixture(1, {{{2}, 1.0}}), layout, 5);
    Rng rng(17);
    SamplerConfig cfg = quick(20000);
    cfg.thin = 20;
    const std::vector<double> betas{0.0, 0.1};
    const GibbsSamples a = pt_sampler(h, betas, cfg, rng);
    const GibbsSamples b = pt_sampler(h, betas, cfg, rng);
    REQUIRE(a.samples[0].size() == 1000);

    for (std::size_t k = 0; k < 2; ++k) {
        std::vector<double> r, r2;
        for (std::size_t t = 0; t < a.samples[k].size(); ++t) {
            CHECK(a.samples[k][t].on_sphere(1e-8));
            const double v = overlap(a.samples[k][t], b.samples[k][t])[0];
            r.push_back(v);
            r2.push_back(v * v);
        }
        const double se = standard_error(r);
        CHECK(std::abs(mean(r)) < 3.5 * se);
        if (k == 0) {
            // Uniform overlaps have second moment 1/N.
            const double se2 = standard_error(r2);
            CHECK(std::abs(mean(r2) - 1.0 / 20) < 3.5 * se2);
        }
    }
}

TEST_CASE("thermodynamic integration at beta zero") {
    const auto layout = share(SpeciesLayout::single(5));
    const HamiltonianInstance h = build_instance(Mixture(1, {{{2}, 1.0}}), layout, 1);
    Rng rng(1);
    const std::vector<double> zero{0.0};
    const auto est = fe_thermo_integration(h, zero, quick(200), rng);
    CHECK(std::abs(est.value) < 1e-9);
    CHECK(est.method == Method::thermo_integration);

    const std::vector<double> bad{0.1, 1.0};
    CHECK_THROWS_AS(fe_thermo_integration(h, bad, quick(200), rng), std::invalid_argument);
    const auto grid = uniform_beta_grid(2.0, 5);
    CHECK(grid == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK(uniform_beta_grid(0.0, 5) == std::vector<double>{0.0});
}

TEST_CASE("integrate_curve is exact on cubics") {
    const auto grid = uniform_beta_grid(1.0, 11);
    std::vector<double> values, errors(grid.size(), 0.0);
    for (double b : grid) values.push_back(b * b * b - b);
    const CurveIntegral c = integrate_curve(grid, values, errors);
    CHECK(c.value == doctest::Approx(0.25 - 0.5).epsilon(1e-13));
    CHECK(c.mc_error == 0.0);
    CHECK(c.grid_error > 0.0);
}

TEST_CASE("thermodynamic integration matches the corner oracle") {
    const auto layout = share(SpeciesLayout::from_sizes({1, 1, 1}));
    const auto grid = uniform_beta_grid(1.0, 21);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const HamiltonianInstance h = build_instance(corner_mixture(), layout, seed);
        Rng rng(100 + seed);
        const auto est = fe_thermo_integration(h, grid, quick(), rng);
        const double exact = exact_fe_enumeration(h).value;
        CHECK(est.std_error > 0.0);
        CHECK(std::abs(est.value - exact) < 3.0 * est.std_error);
        CHECK_FALSE(est.flagged("frozen_chain"));
    }
}

TEST_CASE("thermodynamic integration matches quadrature on circles") {
    const auto layout = share(SpeciesLayout::from_sizes({2, 2}));
    const auto grid = uniform_beta_grid(1.0, 21);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const HamiltonianInstance h =
            build_instance(Mixture(2, {{{1, 1}, 1.0}, {{2, 0}, 0.5}, {{0, 1}, 0.3}}), layout, seed);
        Rng rng(200 + seed);
        const auto est = fe_thermo_integration(h, grid, quick(), rng);
        const double exact = exact_fe_quadrature(h).value;
        CHECK(std::abs(est.value - exact) < 3.0 * est.std_error);
    }
}

TEST_CASE("restricted free energy") {
    const auto layout = share(SpeciesLayout::single(6));
    const auto grid = uniform_beta_grid(1.0, 11);

    // Pure volume.
    const HamiltonianInstance flat = build_instance(Mixture(1), layout, 1);
    Rng rng(5);
    const Configuration m = sample_on_shell(layout, OverlapVector{0.4}, rng);
    const auto vol = restricted_fe(flat, m, 0.1, grid, quick(300), rng);
    CHECK(vol.value == doctest::Approx(log_band_volume(*layout, OverlapVector{0.4}, 0.1)).epsilon(1e-12));
    CHECK(vol.std_error == 0.0);

    // Centre zero: the band is the whole sphere.
    const HamiltonianInstance h = build_instance(Mixture(1, {{{2}, 1.0}}), layout, 2);
    const auto zero = Configuration::zeros(layout);
    Rng r1(9), r2(10);
    const auto whole = restricted_fe(h, zero, 0.2, grid, quick(), r1);
    const auto free = fe_thermo_integration(h, grid, quick(), r2);
    CHECK(std::abs(whole.value - free.value) < 3.0 * (whole.std_error + free.std_error));
    CHECK(whole.meta["log_band_volume"].get<double>() == 0.0);
}

TEST_CASE("restricted free energy matches band enumeration") {
    const auto layout = share(SpeciesLayout::from_sizes({1, 1, 1}));
    const Configuration m(layout, {0.9, 0.1, 0.0});
    const auto grid = uniform_beta_grid(1.0, 21);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const HamiltonianInstance h = build_instance(corner_mixture(), layout, seed);
        Rng rng(300 + seed);
        const auto est = restricted_fe(h, m, 0.3, grid, quick(), rng);
        const auto exact = exact_restricted_fe_enumeration(h, m, 0.3);
        CHECK(exact.meta["configurations_in_band"] == 4);
        CHECK(std::abs(est.value - exact.value) < 3.0 * est.std_error + 1e-12);
    }
}

TEST_CASE("multi-replica free energy") {
    const auto layout = share(SpeciesLayout::from_sizes({1, 1, 1}));
    const Configuration m(layout, {0.9, 0.1, 0.0});
    const HamiltonianInstance h = build_instance(corner_mixture(), layout, 7);
    const auto grid = uniform_beta_grid(1.0, 21);

    Rng a(1), b(1);
    const auto single = multi_replica_fe(h, BandSpec{m, 0.3, 1, 0.5}, grid, quick(), a);
    const auto restricted = restricted_fe(h, m, 0.3, grid, quick(), b);
    CHECK(single.value == restricted.value);

    // Penalty identity under enumeration.
    const double f_band = exact_restricted_fe_enumeration(h, m, 0.3).value;
    for (std::size_t n : {2, 3}) {
        for (double rho : {1.0, 1.5}) {
            const BandSpec spec{m, 0.3, n, rho};
            const double lhs = exact_multi_replica_fe_enumeration(h, spec).value;
            const double rhs = f_band + exact_pair_constraint_log_probability(h, spec) / (3.0 * static_cast<double>(n));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        }
    }

    // Monotone in rho and sub-additive in n.
    const double f2_tight = exact_multi_replica_fe_enumeration(h, BandSpec{m, 0.3, 2, 1.0}).value;
    const double f2_loose = exact_multi_replica_fe_enumeration(h, BandSpec{m, 0.3, 2, 1.5}).value;
    const double f4_tight = exact_multi_replica_fe_enumeration(h, BandSpec{m, 0.3, 4, 1.0}).value;
    const double f1 = exact_multi_replica_fe_enumeration(h, BandSpec{m, 0.3, 1, 1.0}).value;
    CHECK(f2_tight < f2_loose);
    CHECK(f2_loose == doctest::Approx(f1).epsilon(1e-12));
    CHECK(f4_tight <= f2_tight + 1e-12);
    CHECK(f2_tight <= f1 + 1e-12);

    // Coupled-replica estimate against enumeration.
    Rng rng(11);
    const BandSpec spec{m, 0.3, 2, 1.0};
    const auto est = multi_replica_fe(h, spec, grid, quick(), rng);
    CHECK(std::abs(est.value - f2_tight) < 3.0 * est.std_error);
    CHECK(est.meta["pair_hits"].get<std::size_t>() > 0);
}

TEST_CASE("multisamplability profile") {
    const auto layout = share(SpeciesLayout::single(200));
    const HamiltonianInstance h = build_instance(Mixture(1, {{{2}, 1.0}}), layout, 3);
    Rng rng(4);
    const std::vector<double> zero{0.0};
    const auto vacuous = multisamplability_profile(h, OverlapVector{0.3}, 3, 2.0, zero, quick(100), rng);
    CHECK(vacuous.value == 0.0);

    SamplerConfig cfg = quick(1000);
    const auto near = multisamplability_profile(h, OverlapVector{0.0}, 2, 0.5, zero, cfg, rng);
    CHECK(near.trials == 100);
    CHECK(near.hits == near.trials);
    CHECK(near.value == 0.0);
    CHECK(near.lower <= near.value);

    const auto far = multisamplability_profile(h, OverlapVector{0.9}, 2, 0.05, zero, cfg, rng);
    CHECK(far.hits == 0);
    CHECK(far.value == doctest::Approx(std::log(0.5 / 100) / 200));
    CHECK(far.value < near.value);
    CHECK_THROWS_AS(multisamplability_profile(h, OverlapVector{0.0}, 1, 0.5, zero, cfg, rng), std::invalid_argument);
}
