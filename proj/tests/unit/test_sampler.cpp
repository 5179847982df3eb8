#include "pspin/numerics.hpp"
#include "pspin/sampler.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace pspin;

namespace {

// Three states under the counting measure, uniform proposal among the others.
struct ToySystem {
    using State = int;
    std::array<double, 3> e{0.0, 1.0, -0.5};

    std::size_t move_kinds() const { return 1; }
    bool adaptive(std::size_t) const { return false; }
    double energy(const State& s) const { return e[static_cast<std::size_t>(s)]; }
    std::optional<double> propose(const State& cur, double, std::size_t, double, Rng& rng, State& out) const {
        out = (cur + 1 + static_cast<int>(rng() % 2)) % 3;
        return e[static_cast<std::size_t>(out)];
    }
};

// The same toy with state 1 forbidden.
struct ConstrainedToy : ToySystem {
    std::optional<double> propose(const State& cur, double c, std::size_t k, double s, Rng& rng, State& out) const {
        auto v = ToySystem::propose(cur, c, k, s, rng, out);
        if (out == 1) return std::nullopt;
        return v;
    }
};

std::array<double, 3> gibbs(const ToySystem& sys, double beta, bool skip_middle = false) {
    std::array<double, 3> p{};
    double z = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        p[i] = (skip_middle && i == 1) ? 0.0 : std::exp(beta * sys.e[i]);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

template <typename Result>
std::array<double, 3> frequencies(const Result& r, std::size_t chain) {
    std::array<double, 3> f{};
    for (int s : r.samples[chain]) f[static_cast<std::size_t>(s)] += 1.0;
    for (double& v : f) v /= static_cast<double>(r.samples[chain].size());
    return f;
}

} // namespace

TEST_CASE("toy chain reaches its exact stationary law") {
    const ToySystem sys;
    SamplerConfig cfg;
    cfg.burn_in = 100;
    cfg.sweeps = 200000;
    cfg.thin = 1;
    cfg.record_samples = true;
    const std::vector<double> betas{1.3};
    const auto r = replica_exchange(sys, betas, cfg, 5, [](std::size_t, Rng&) { return 0; });
    const auto f = frequencies(r, 0);
    const auto p = gibbs(sys, 1.3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(f[i] - p[i]) < 0.01);

    // Detailed balance: transition counts are symmetric.
    std::array<std::array<double, 3>, 3> count{};
    for (std::size_t t = 1; t < r.samples[0].size(); ++t)
        count[static_cast<std::size_t>(r.samples[0][t - 1])][static_cast<std::size_t>(r.samples[0][t])] += 1.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            const double a = count[i][j], b = count[j][i];
            CHECK(std::abs(a - b) < 4.0 * std::sqrt(a + b));
        }
}

TEST_CASE("replica exchange keeps every chain's law") {
    const ToySystem sys;
    SamplerConfig cfg;
    cfg.burn_in = 100;
    cfg.sweeps = 100000;
    cfg.thin = 1;
    cfg.record_samples = true;
    const std::vector<double> betas{0.0, 0.7, 1.5};
    const auto r = replica_exchange(sys, betas, cfg, 9, [](std::size_t k, Rng&) { return static_cast<int>(k); });
    for (std::size_t c = 0; c < 3; ++c) {
        const auto f = frequencies(r, c);
        const auto p = gibbs(sys, betas[c]);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(f[i] - p[i]) < 0.015);
    }
    CHECK(r.swap_acceptance.size() == 2);
    CHECK_FALSE(r.poor_mixing);
}

TEST_CASE("constraint rejection preserves the restricted law") {
    const ConstrainedToy sys;
    SamplerConfig cfg;
    cfg.burn_in = 100;
    cfg.sweeps = 100000;
    cfg.thin = 1;
    cfg.record_samples = true;
    const std::vector<double> betas{0.8};
    const auto r = replica_exchange(sys, betas, cfg, 3, [](std::size_t, Rng&) { return 0; });
    const auto f = frequencies(r, 0);
    const auto p = gibbs(sys, 0.8, true);
    CHECK(f[1] == 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(f[i] - p[i]) < 0.01);
    CHECK(r.chains[0].outside > 0);
}

TEST_CASE("replica exchange is deterministic and validates its grid") {
    const ToySystem sys;
    SamplerConfig cfg;
    cfg.burn_in = 10;
    cfg.sweeps = 500;
    const std::vector<double> betas{0.0, 1.0};
    auto init = [](std::size_t, Rng&) { return 0; };
    const auto a = replica_exchange(sys, betas, cfg, 1, init);
    const auto b = replica_exchange(sys, betas, cfg, 1, init);
    CHECK(a.chains[1].energies == b.chains[1].energies);
    const std::vector<double> bad{1.0, 0.0};
    CHECK_THROWS_AS(replica_exchange(sys, bad, cfg, 1, init), std::invalid_argument);
    cfg.thin = 0;
    CHECK_THROWS_AS(replica_exchange(sys, betas, cfg, 1, init), std::invalid_argument);
}

TEST_CASE("sphere moves stay on the sphere and adapt") {
    const auto layout = share(SpeciesLayout::from_sizes({1, 5}));
    const HamiltonianInstance h = build_instance(Mixture(2, {{{1, 1}, 1.0}, {{0, 2}, 1.0}}), layout, 3);
    const ReplicaSphereSystem sys(h, 1);
    SamplerConfig cfg;
    cfg.burn_in = 500;
    cfg.sweeps = 2000;
    cfg.thin = 50;
    cfg.record_samples = true;
    const std::vector<double> betas{0.0, 1.0};
    const auto r = replica_exchange(sys, betas, cfg, 4, [&](std::size_t, Rng& rng) { return sys.random_state(rng); });
    for (const auto& chain : r.samples)
        for (const auto& st : chain) {
            const Configuration x = sys.replica(st, 0);
            CHECK(x.on_sphere(1e-8));
            CHECK(st.energies[0] == doctest::Approx(h.energy(x)).epsilon(1e-12));
        }
    CHECK(sys.adaptive(1));
    CHECK_FALSE(sys.adaptive(0));
    CHECK(r.chains[1].steps[0] == cfg.initial_step);
    const double acc = r.chains[1].acceptance();
    CHECK(acc > 0.2);
    CHECK(acc < 0.8);
}

TEST_CASE("band-restricted replicas never leave the multi-band") {
    const auto layout = share(SpeciesLayout::single(6));
    const HamiltonianInstance h = build_instance(Mixture(1, {{{2}, 1.0}}), layout, 8);
    Rng rng(1);
    const Configuration m = sample_on_shell(layout, OverlapVector{0.5}, rng);
    const BandSpec spec{m, 0.1, 2, 0.4};
    const ReplicaSphereSystem sys(h, spec);
    CHECK(sys.offset() == h.energy(m));
    SamplerConfig cfg;
    cfg.burn_in = 200;
    cfg.sweeps = 1000;
    cfg.thin = 10;
    cfg.record_samples = true;
    const std::vector<double> betas{0.0, 1.0};
    const auto r = replica_exchange(sys, betas, cfg, 2, [&](std::size_t, Rng& g) { return sys.random_state(g); });
    for (const auto& chain : r.samples)
        for (const auto& st : chain) {
            const std::vector<Configuration> reps{sys.replica(st, 0), sys.replica(st, 1)};
            CHECK(in_multi_band(reps, spec));
            CHECK(sys.energy(st) ==
                  doctest::Approx(h.energy(reps[0]) + h.energy(reps[1]) - 2 * h.energy(m)).epsilon(1e-12));
        }
}

TEST_CASE("collective moves flip species locked by the pair constraint") {
    const auto layout = share(SpeciesLayout::from_sizes({1, 1}));
    const HamiltonianInstance h = build_instance(Mixture(2, {{{1, 1}, 1.0}}), layout, 2);
    const Configuration m(layout, {0.1, 0.0});
    const BandSpec spec{m, 0.5, 2, 1.0};
    const ReplicaSphereSystem sys(h, spec);
    CHECK(sys.move_kinds() == 6);
    SamplerConfig cfg;
    cfg.burn_in = 10;
    cfg.sweeps = 2000;
    cfg.thin = 1;
    cfg.record_samples = true;
    const std::vector<double> betas{0.0};
    const auto r = replica_exchange(sys, betas, cfg, 6, [&](std::size_t, Rng& g) { return sys.random_state(g); });
    std::size_t positive = 0;
    for (const auto& st : r.samples[0]) {
        CHECK(st.coords[0] == st.coords[2]);
        positive += st.coords[0] > 0 ? 1 : 0;
    }
    CHECK(positive > 800);
    CHECK(positive < 1200);
}
