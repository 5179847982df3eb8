#include "pspin/hamiltonian.hpp"
#include "pspin/numerics.hpp"

#include <doctest.h>

#include <cmath>

using namespace pspin;

namespace {

Mixture square() { return Mixture(1, {{{2}, 1.0}}); }
Mixture bipartite() { return Mixture(2, {{{1, 1}, 1.0}}); }
Mixture mixed() { return Mixture(2, {{{1, 0}, 0.3}, {{1, 1}, 0.8}, {{2, 1}, 0.5}, {{0, 3}, 0.4}}); }

std::vector<double> negate(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v = -v;
    return out;
}

} // namespace

TEST_CASE("tuple variances") {
    CHECK(tuple_variance(square(), SpeciesLayout::single(4), {2}) == doctest::Approx(1.0 / 16));
    CHECK(tuple_variance(bipartite(), SpeciesLayout::from_sizes({2, 2}), {1, 1}) == doctest::Approx(1.0 / 8));
}

TEST_CASE("instance construction") {
    const auto layout = share(SpeciesLayout::single(4));
    const HamiltonianInstance h = build_instance(square(), layout, 7);
    CHECK(h.terms().size() == 1);
    CHECK(h.disorder_entries() == 16);
    CHECK(h.terms()[0].weight == doctest::Approx(2.0 * 0.25));
    CHECK_THROWS_AS(build_instance(square(), layout, 7, Backend::tensor, 10), BudgetExceeded);
    CHECK_THROWS_AS(build_instance(bipartite(), layout, 7), std::invalid_argument);
    CHECK(backend_from_string("covariance") == Backend::covariance);
    CHECK_THROWS_AS(backend_from_string("dense"), std::invalid_argument);
}

TEST_CASE("energy basics") {
    Rng rng(3);
    const auto layout = share(SpeciesLayout::from_sizes({3, 4}));
    const HamiltonianInstance empty = build_instance(Mixture(2), layout, 1);
    CHECK(empty.energy(sample_uniform(layout, rng)) == 0.0);

    const HamiltonianInstance h = build_instance(mixed(), layout, 5);
    CHECK(h.energy(Configuration::zeros(layout)) == 0.0);

    const Mixture even(2, {{{1, 1}, 1.0}, {{2, 2}, 0.5}});
    const HamiltonianInstance he = build_instance(even, layout, 5);
    const Configuration x = sample_uniform(layout, rng);
    CHECK(he.energy(x) == doctest::Approx(he.energy(negate(x.coords()))).epsilon(1e-13));

    const HamiltonianInstance again = build_instance(mixed(), layout, 5);
    CHECK(again.energy(x) == h.energy(x));
    CHECK(build_instance(mixed(), layout, 6).energy(x) != h.energy(x));
}

TEST_CASE("energy matches the explicit double sum for the 2-spin term") {
    Rng rng(4);
    const auto layout = share(SpeciesLayout::single(5));
    const HamiltonianInstance h = build_instance(square(), layout, 9);
    const Configuration x = sample_uniform(layout, rng);
    const auto& t = h.terms()[0];
    double direct = 0.0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) direct += t.disorder[i * 5 + j] * x[i] * x[j];
    CHECK(h.energy(x) == doctest::Approx(t.weight * direct).epsilon(1e-13));

    // Gradient of the quadratic form: weight * (J + J^T) sigma.
    const auto g = h.gradient(x);
    for (std::size_t i = 0; i < 5; ++i) {
        double gi = 0.0;
        for (std::size_t j = 0; j < 5; ++j) gi += (t.disorder[i * 5 + j] + t.disorder[j * 5 + i]) * x[j];
        CHECK(g[i] == doctest::Approx(t.weight * gi).epsilon(1e-12));
    }
}

TEST_CASE("gradient matches finite differences") {
    Rng rng(5);
    const auto layout = share(SpeciesLayout::from_sizes({3, 3}));
    const double h = 1e-5;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const HamiltonianInstance inst = build_instance(mixed(), layout, seed);
        const Configuration x = sample_in_ball(layout, rng);
        const auto g = inst.gradient(x);
        double scale = 0.0;
        for (double v : g) scale = std::max(scale, std::abs(v));
        for (std::size_t i = 0; i < x.dimension(); ++i) {
            std::vector<double> up(x.coords().begin(), x.coords().end()), dn = up;
            up[i] += h;
            dn[i] -= h;
            const double fd = (inst.energy(up) - inst.energy(dn)) / (2 * h);
            CHECK(std::abs(fd - g[i]) <= 1e-6 * scale);
        }
    }
}

TEST_CASE("linear mixture has a constant gradient") {
    Rng rng(6);
    const auto layout = share(SpeciesLayout::from_sizes({2, 3}));
    const HamiltonianInstance h = build_instance(Mixture(2, {{{1, 0}, 1.0}, {{0, 1}, 2.0}}), layout, 2);
    const auto g1 = h.gradient(sample_uniform(layout, rng));
    const auto g2 = h.gradient(sample_uniform(layout, rng));
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-14));
}

TEST_CASE("per-species Euler homogeneity of each term") {
    Rng rng(7);
    const auto layout = share(SpeciesLayout::from_sizes({3, 2}));
    const HamiltonianInstance h = build_instance(mixed(), layout, 8);
    const Configuration x = sample_uniform(layout, rng);
    for (std::size_t k = 0; k < h.terms().size(); ++k) {
        // A single-term instance isolates the term's gradient.
        const MultiDegree& p = h.terms()[k].degree;
        const HamiltonianInstance solo = build_instance(Mixture(2, {{p, mixed().coefficient(p)}}), layout, 8);
        const double term = h.term_energy(k, x.coords());
        const auto g = solo.gradient(x);
        CHECK(solo.energy(x) != 0.0);
        for (std::size_t s = 0; s < 2; ++s) {
            double euler = 0.0;
            for (std::size_t i = layout->offset(s); i < layout->offset(s) + layout->size(s); ++i) euler += x[i] * g[i];
            CHECK(std::abs(euler - p[s] * solo.energy(x)) <= 1e-8 * std::max(1.0, std::abs(term)));
        }
    }
}

TEST_CASE("empirical covariance of the tensor backend") {
    const auto layout = share(SpeciesLayout::from_sizes({2, 2}));
    const Mixture xi = mixed();
    Rng rng(8);
    const Configuration a = sample_uniform(layout, rng), b = sample_uniform(layout, rng);
    const double n = 4.0;
    const int reps = 4000;
    std::vector<double> prod(reps);
    for (int r = 0; r < reps; ++r) {
        const HamiltonianInstance h = build_instance(xi, layout, derive_seed(1234, static_cast<std::uint64_t>(r)));
        prod[r] = h.energy(a) * h.energy(b) / n;
    }
    const double target = eval_mixture(xi, overlap(a, b));
    CHECK(std::abs(mean(prod) - target) <= 4 * standard_error(prod));
}

TEST_CASE("covariance backend") {
    const auto layout = share(SpeciesLayout::from_sizes({2, 2}));
    Rng rng(9);
    const HamiltonianInstance h = build_instance(mixed(), layout, 3, Backend::covariance);
    const Configuration a = sample_uniform(layout, rng), b = sample_uniform(layout, rng);
    CHECK_THROWS_AS(h.energy(a), std::logic_error);
    CHECK_THROWS_AS(h.gradient(a), std::logic_error);
    CHECK(h.disorder_entries() == 0);

    const std::vector<Configuration> pts{a, b, a};
    const auto v = h.realize(pts);
    CHECK(v[0] == v[2]);
    CHECK(v == h.realize(pts));

    const int reps = 4000;
    std::vector<double> sq(reps);
    const std::vector<Configuration> one{a};
    for (int r = 0; r < reps; ++r) {
        const double x = realize_on_points(mixed(), *layout, one, static_cast<std::uint64_t>(r))[0];
        sq[r] = x * x;
    }
    CHECK(std::abs(mean(sq) - 4.0 * eval_mixture_at(mixed(), 1.0)) <= 4 * standard_error(sq));

}

TEST_CASE("external field") {
    const auto layout = share(SpeciesLayout::from_sizes({3, 3}));
    const Mixture xi(2, {{{1, 1}, 1.0}, {{2, 0}, 0.5}});
    Rng rng(10);

    const OverlapVector zero{0.0, 0.0};
    const HamiltonianInstance h0 = build_instance(xi_q(xi, zero), layout, 4);
    const HamiltonianInstance f0 = attach_external_field(h0, xi, zero, 4);
    for (double v : f0.field()) CHECK(v == 0.0);
    CHECK_THROWS_AS(attach_external_field(build_instance(xi, layout, 4), xi, OverlapVector{0.3, 0.2}, 4),
                    std::invalid_argument);

    const OverlapVector q{0.4, 0.2};
    const HamiltonianInstance hq = build_instance(xi_q(xi, q), layout, 4);
    const HamiltonianInstance full = attach_external_field(hq, xi, q, 4);
    CHECK(full.mixture() == shifted_coefficients(xi, q));
    const Configuration x = sample_uniform(layout, rng);
    double lin = 0.0;
    for (std::size_t i = 0; i < 6; ++i) lin += full.field()[i] * x[i];
    CHECK(full.energy(x) == doctest::Approx(hq.energy(x) + lin).epsilon(1e-13));

    // Covariance of the combined process is N xi~_q(R).
    const Configuration a = sample_uniform(layout, rng), b = sample_uniform(layout, rng);
    const int reps = 4000;
    std::vector<double> prod(reps);
    for (int r = 0; r < reps; ++r) {
        const std::uint64_t seed = derive_seed(77, static_cast<std::uint64_t>(r));
        const HamiltonianInstance g = attach_external_field(build_instance(xi_q(xi, q), layout, seed), xi, q, seed);
        prod[r] = g.energy(a) * g.energy(b) / 6.0;
    }
    CHECK(std::abs(mean(prod) - eval_mixture(shifted_coefficients(xi, q), overlap(a, b))) <= 4 * standard_error(prod));
}

TEST_CASE("one-spin field bound on replica tuples") {
    const auto layout = share(SpeciesLayout::from_sizes({20, 20}));
    const Mixture xi(2, {{{1, 1}, 1.0}});
    const OverlapVector q{0.5, 0.3};
    const HamiltonianInstance hq = build_instance(xi_q(xi, q), layout, 5);
    const HamiltonianInstance full = attach_external_field(hq, xi, q, 5);
    const Mixture shifted = shifted_coefficients(xi, q);
    const double n_total = 40.0;
    double j_norm_sq = 0.0, delta_sum = 0.0;
    for (std::size_t s = 0; s < 2; ++s) {
        MultiDegree unit(2, 0);
        unit[s] = 1;
        const double d = std::sqrt(shifted.coefficient(unit));
        delta_sum += d;
        const double scale = std::sqrt(n_total / 20.0) * d;
        for (std::size_t i = layout->offset(s); i < layout->offset(s) + 20; ++i)
            j_norm_sq += std::pow(full.field()[i] / scale, 2);
    }
    Rng rng(11);
    const std::size_t n = 3;
    const double rho = 0.5;
    const Configuration origin = Configuration::zeros(layout);
    const BandSpec spec{origin, 0.0, n, rho};
    int tested = 0;
    for (int t = 0; t < 200; ++t) {
        std::vector<Configuration> reps;
        for (std::size_t k = 0; k < n; ++k) reps.push_back(sample_uniform(layout, rng));
        if (!in_multi_band(reps, spec)) continue;
        ++tested;
        double contribution = 0.0;
        for (const auto& r : reps)
            for (std::size_t i = 0; i < 40; ++i) contribution += full.field()[i] * r[i];
        const double bound = std::sqrt((1.0 / n + rho) / n_total) * std::sqrt(j_norm_sq) * delta_sum;
        CHECK(std::abs(contribution) / (n_total * n) <= bound);
    }
    CHECK(tested > 100);
}

TEST_CASE("lipschitz ratio") {
    const auto layout = share(SpeciesLayout::single(12));
    const HamiltonianInstance lin = build_instance(Mixture(1, {{{1}, 2.0}}), layout, 3);
    double j_norm = 0.0;
    for (double j : lin.terms()[0].disorder) j_norm += j * j;
    j_norm = std::sqrt(j_norm);
    Rng rng(12);
    const double ratio = lipschitz_ratio(lin, 400, rng);
    CHECK(ratio > 0.0);
    CHECK(ratio <= std::sqrt(2.0) * j_norm / std::sqrt(12.0) * (1 + 1e-12));

    std::vector<double> ratios;
    for (std::size_t n : {8u, 16u, 32u}) {
        const auto l = share(SpeciesLayout::single(n));
        ratios.push_back(lipschitz_ratio(build_instance(square(), l, 1), 300, rng));
    }
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi <= 2.0 * *lo);
}
