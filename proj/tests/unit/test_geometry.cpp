#include "pspin/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace pspin;

namespace {

const LayoutPtr& two_species() {
    static const LayoutPtr layout = share(SpeciesLayout({"a", "b"}, {5, 7}));
    return layout;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

TEST_CASE("overlap basics") {
    Rng rng(1);
    const auto layout = two_species();
    const Configuration a = sample_uniform(layout, rng);
    const auto self = overlap(a, a);
    CHECK(self[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(self[1] == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> neg(a.coords().begin(), a.coords().end());
    for (double& v : neg) v = -v;
    const auto anti = overlap(a, Configuration(layout, neg));
    CHECK(anti[0] == doctest::Approx(-1.0));
    CHECK(anti[1] == doctest::Approx(-1.0));

    const OverlapVector q{0.3, 0.6};
    const Configuration m = sample_on_shell(layout, q, rng);
    CHECK(overlap(m, m)[0] == doctest::Approx(0.3));
    CHECK(overlap(m, m)[1] == doctest::Approx(0.6));
}

TEST_CASE("overlap symmetry, bilinearity and Cauchy-Schwarz") {
    Rng rng(2);
    const auto layout = two_species();
    for (int t = 0; t < 50; ++t) {
        const Configuration a = sample_in_ball(layout, rng);
        const Configuration b = sample_in_ball(layout, rng);
        const Configuration c = sample_uniform(layout, rng);
        const auto ab = overlap(a, b), ba = overlap(b, a);
        std::vector<double> sum(a.dimension());
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = 2.0 * a[i] + c[i];
        const auto lin = overlap(Configuration(layout, sum), b);
        const auto cb = overlap(c, b);
        const auto aa = overlap(a, a), bb = overlap(b, b);
        for (std::size_t s = 0; s < 2; ++s) {
            CHECK(ab[s] == ba[s]);
            CHECK(lin[s] == doctest::Approx(2.0 * ab[s] + cb[s]));
            CHECK(std::abs(ab[s]) <= std::sqrt(aa[s] * bb[s]) + 1e-15);
        }
    }
}

TEST_CASE("configuration caches block norms") {
    const auto layout = two_species();
    Configuration x = Configuration::zeros(layout);
    x.modify([](std::span<double> c) { c[0] = 2.0; c[6] = 3.0; });
    CHECK(x.block_norm_sq(0) == 4.0);
    CHECK(x.block_norm_sq(1) == 9.0);
    CHECK_THROWS_AS(Configuration(layout, std::vector<double>(3)), std::invalid_argument);
}

TEST_CASE("uniform sampling") {
    Rng rng(3);
    CHECK(sample_uniform(two_species(), rng).on_sphere());

    const auto single = share(SpeciesLayout::single(1));
    for (int t = 0; t < 10; ++t) CHECK(std::abs(sample_uniform(single, rng)[0]) == 1.0);

    const auto big = share(SpeciesLayout::single(1000));
    const Configuration a = sample_uniform(big, rng), b = sample_uniform(big, rng);
    CHECK(std::abs(overlap(a, b)[0]) < 5.0 / std::sqrt(1000.0));

    // Chi-squared smoke test on one marginal: x_0 / sqrt(N) has density
    // proportional to (1 - u^2)^((N-3)/2); at N = 3 it is uniform on [-1, 1].
    const auto three = share(SpeciesLayout::single(3));
    std::vector<int> bins(10, 0);
    const int draws = 20000;
    for (int t = 0; t < draws; ++t) {
        const double u = sample_uniform(three, rng)[0] / std::sqrt(3.0);
        bins[std::min(9, static_cast<int>((u + 1.0) * 5.0))]++;
    }
    double chi2 = 0.0;
    for (int c : bins) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
    CHECK(chi2 < 27.9); // 99.9% quantile at 9 degrees of freedom
}

TEST_CASE("shell sampling") {
    Rng rng(4);
    const auto layout = two_species();
    const Configuration zero = sample_on_shell(layout, OverlapVector{0.0, 0.0}, rng);
    for (double v : zero.coords()) CHECK(v == 0.0);
    const OverlapVector q{0.25, 0.8};
    CHECK(sample_on_shell(layout, q, rng).on_shell(q));
}

TEST_CASE("band membership") {
    Rng rng(5);
    const auto layout = two_species();
    const OverlapVector q{0.5, 0.3};
    const Configuration m = sample_on_shell(layout, q, rng);

    // m pushed out to the sphere has R_s(sigma, m) = sqrt(q(s)).
    const Configuration sigma = rescale_to_shell(m, OverlapVector{1.0 - 1e-15, 1.0 - 1e-15});
    const double need = std::max(std::sqrt(0.5) - 0.5, std::sqrt(0.3) - 0.3);
    CHECK(in_band(sigma, m, need + 1e-9));
    CHECK_FALSE(in_band(sigma, m, need - 1e-3));

    const Configuration origin = Configuration::zeros(layout);
    for (int t = 0; t < 10; ++t) CHECK(in_band(sample_uniform(layout, rng), origin, 0.0));
    CHECK_FALSE(in_band(sample_uniform(layout, rng), m, 0.0));
}

TEST_CASE("multi-band membership") {
    Rng rng(6);
    const auto layout = two_species();
    const Configuration m = sample_on_shell(layout, OverlapVector{0.4, 0.4}, rng);
    const Configuration s1 = sample_in_band(m, 0.05, rng);

    BandSpec one{m, 0.05, 1, 0.0};
    const std::vector<Configuration> single{s1};
    CHECK(in_multi_band(single, one) == in_band(s1, m, 0.05));

    BandSpec two{m, 0.05, 2, 0.01};
    const std::vector<Configuration> twins{s1, s1};
    CHECK_FALSE(in_multi_band(twins, two));
    CHECK_THROWS_AS(in_multi_band(single, two), std::invalid_argument);
    CHECK_THROWS_AS(BandSpec({m, -1.0, 1, 0.0}).validate(), std::invalid_argument);
}

TEST_CASE("members of the multi-band are nearly orthogonal around m") {
    Rng rng(7);
    const auto layout = share(SpeciesLayout::single(6));
    const double delta = 0.1, rho = 0.3;
    const Configuration m = sample_on_shell(layout, OverlapVector{0.5}, rng);
    const BandSpec spec{m, delta, 2, rho};
    int found = 0;
    for (int t = 0; t < 4000 && found < 100; ++t) {
        const std::vector<Configuration> pair{sample_in_band(m, delta, rng), sample_in_band(m, delta, rng)};
        if (!in_multi_band(pair, spec)) continue;
        ++found;
        std::vector<double> a(6), b(6);
        for (std::size_t i = 0; i < 6; ++i) {
            a[i] = pair[0][i] - m[i];
            b[i] = pair[1][i] - m[i];
        }
        // R(s1-m, s2-m) = R(s1,s2) - R(s1,m) - R(s2,m) + R(m,m), each within delta or rho of q.
        CHECK(std::abs(overlap(*layout, a, b)[0]) <= 2 * delta + rho + 1e-12);
    }
    CHECK(found > 10);
}

TEST_CASE("tilde transform") {
    Rng rng(8);
    const auto layout = two_species();
    const OverlapVector q{0.4, 0.7};
    const Configuration m = sample_on_shell(layout, q, rng);

    const OverlapVector zero{0.0, 0.0};
    const Configuration origin = Configuration::zeros(layout);
    const Configuration u = sample_uniform(layout, rng);
    CHECK(max_abs_diff(tilde_transform(u, origin, zero).coords(), u.coords()) == 0.0);

    const Configuration s1 = sample_in_band(m, 0.0, rng);
    const Configuration s2 = sample_in_band(m, 0.0, rng);
    const Configuration t1 = tilde_transform(s1, m, q);
    const Configuration t2 = tilde_transform(s2, m, q);
    CHECK(t1.on_sphere(1e-9));
    const auto rm = overlap(t1, m);
    CHECK(std::abs(rm[0]) < 1e-12);
    CHECK(std::abs(rm[1]) < 1e-12);
    const auto r12 = overlap(s1, s2), rt = overlap(t1, t2);
    for (std::size_t s = 0; s < 2; ++s) CHECK(rt[s] == doctest::Approx((r12[s] - q[s]) / (1 - q[s])).epsilon(1e-10));
    CHECK(max_abs_diff(untilde_transform(t1, m, q).coords(), s1.coords()) < 1e-9);

    CHECK_THROWS_AS(tilde_transform(u, m, q), std::invalid_argument);
}

TEST_CASE("project phi") {
    Rng rng(9);
    const auto layout = two_species();
    const OverlapVector q{0.5, 0.2};
    const Configuration m = sample_on_shell(layout, q, rng);
    for (int t = 0; t < 30; ++t) {
        const Configuration sigma = sample_uniform(layout, rng);
        const Configuration pi = project_phi(sigma, m);
        const auto rpm = overlap(pi, m), rpp = overlap(pi, pi);
        for (std::size_t s = 0; s < 2; ++s) {
            CHECK(std::abs(rpm[s] - q[s]) < 1e-9);
            CHECK(std::abs(rpp[s] - 1.0) < 1e-9);
        }
        CHECK(max_abs_diff(project_phi(pi, m).coords(), pi.coords()) < 1e-9);

        // The dilation family shares the same image.
        const OverlapVector tvec{0.1 * (t % 3), -0.05 * (t % 2)};
        const Configuration mt = dilate(m, tvec);
        CHECK(max_abs_diff(project_phi(project_phi(sigma, mt), m).coords(), pi.coords()) < 1e-9);
    }

    // Distance bound inside a band.
    const double delta = 0.05;
    for (int t = 0; t < 30; ++t) {
        const Configuration sigma = sample_in_band(m, delta, rng);
        const Configuration pi = project_phi(sigma, m);
        std::vector<double> d(sigma.dimension());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = pi[i] - sigma[i];
        const auto r = overlap(*layout, d, d);
        for (std::size_t s = 0; s < 2; ++s) CHECK(r[s] <= 2 * delta / std::sqrt(q[s]) + 1e-12);
    }

    // Species with R_s(m, m) = 0 pass through.
    const Configuration half = sample_on_shell(layout, OverlapVector{0.5, 0.0}, rng);
    const Configuration sigma = sample_uniform(layout, rng);
    const Configuration pi = project_phi(sigma, half);
    for (std::size_t i = 5; i < 12; ++i) CHECK(pi[i] == sigma[i]);
    CHECK_THROWS_AS(project_phi(rescale_to_shell(m, OverlapVector{1.0 - 1e-16, 1.0 - 1e-16}), m), std::domain_error);
}

TEST_CASE("rescale to shell") {
    Rng rng(10);
    const auto layout = two_species();
    const OverlapVector q{0.3, 0.6};
    const Configuration on = sample_on_shell(layout, q, rng);
    CHECK(max_abs_diff(rescale_to_shell(on, q).coords(), on.coords()) < 1e-12);

    for (int t = 0; t < 20; ++t) {
        const Configuration mp = sample_in_ball(layout, rng);
        const Configuration ms = rescale_to_shell(mp, q);
        CHECK(ms.on_shell(q));
        std::vector<double> d(ms.dimension());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = ms[i] - mp[i];
        const auto r = overlap(*layout, d, d);
        const auto rmm = overlap(mp, mp);
        for (std::size_t s = 0; s < 2; ++s) {
            const double expect = std::pow(std::sqrt(q[s]) - std::sqrt(rmm[s]), 2);
            CHECK(r[s] == doctest::Approx(expect).epsilon(1e-9));
            CHECK(r[s] <= std::abs(rmm[s] - q[s]) + 1e-12);
        }
    }
    const Configuration collapsed = rescale_to_shell(on, OverlapVector{0.0, 0.0});
    for (double v : collapsed.coords()) CHECK(v == 0.0);
    CHECK_THROWS_AS(rescale_to_shell(Configuration::zeros(layout), q), std::domain_error);
}

TEST_CASE("band measure oracles") {
    // Frozen values from 40-digit quadrature of sin^(N-2) over the band angles.
    CHECK(log_band_measure_species(2, 0.5, 0.01) == doctest::Approx(-4.3633388072973695).epsilon(1e-10));
    CHECK(log_band_measure_species(5, 0.5, 0.01) == doctest::Approx(-4.5464120103829112).epsilon(1e-10));
    CHECK(log_band_measure_species(200, 0.5, 0.01) == doctest::Approx(-68.309679860332323).epsilon(1e-10));
    // N = 3: the cosine is uniform, so the measure is half the band length.
    CHECK(log_band_measure_species(3, 0.3, 0.2) == doctest::Approx(-1.0074515102711323).epsilon(1e-12));
    CHECK(log_band_measure_species(1, 0.25, 0.3) == doctest::Approx(std::log(0.5)));
    CHECK(log_band_measure_species(1, 0.25, 0.8) == 0.0);
    CHECK(std::isinf(log_band_measure_species(1, 0.25, 0.1)));

    const SpeciesLayout one = SpeciesLayout::single(200);
    CHECK(log_band_volume(one, OverlapVector{0.0}, 0.01) == 0.0);
    CHECK(log_band_volume(one, OverlapVector{0.5}, 0.01) == doctest::Approx(-0.34154839930166164).epsilon(1e-10));
    CHECK(std::abs(log_band_volume(one, OverlapVector{0.5}, 0.01) - 0.5 * std::log(0.5)) < 0.01);
}

TEST_CASE("exact band sampling matches the band measure") {
    Rng rng(12);
    const auto layout = share(SpeciesLayout::single(4));
    const Configuration m = sample_on_shell(layout, OverlapVector{0.5}, rng);
    const double wide = 0.3, narrow = 0.1;
    // P(narrow band | wide band) under the uniform law on the wide band.
    const double expect = std::exp(log_band_measure_species(4, 0.5, narrow) - log_band_measure_species(4, 0.5, wide));
    const int draws = 40000;
    int hits = 0;
    for (int t = 0; t < draws; ++t) {
        const Configuration s = sample_in_band(m, wide, rng);
        REQUIRE(s.on_sphere(1e-9));
        REQUIRE(in_band(s, m, wide + 1e-12));
        if (in_band(s, m, narrow)) ++hits;
    }
    const double p = static_cast<double>(hits) / draws;
    CHECK(std::abs(p - expect) < 4 * std::sqrt(expect * (1 - expect) / draws));

    const auto corner = share(SpeciesLayout::single(1));
    CHECK_THROWS_AS(sample_in_band(Configuration(corner, {0.5}), 0.1, rng), std::domain_error);
}
