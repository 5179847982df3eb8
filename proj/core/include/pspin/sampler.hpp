#pragma once

#include "pspin/geometry.hpp"
#include "pspin/hamiltonian.hpp"
#include "pspin/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pspin {

struct SamplerConfig {
    std::size_t burn_in = 1000;
    std::size_t sweeps = 4000;
    /// Sweeps between recorded samples (when recording).
    std::size_t thin = 10;
    bool record_samples = false;
    double initial_step = 0.5;
    double target_acceptance = 0.4;
    /// Burn-in sweeps between step-size updates.
    std::size_t adapt_interval = 25;
    std::size_t batches = 20;

    void validate() const;
};

/// A target exp(beta E) restricted to an admissible set, with a move
/// kernel that is symmetric with respect to the base measure.
template <typename S>
concept SamplerSystem = requires(const S& sys, const typename S::State& state, typename S::State& out, Rng& rng) {
    { sys.move_kinds() } -> std::convertible_to<std::size_t>;
    { sys.adaptive(std::size_t{}) } -> std::convertible_to<bool>;
    { sys.energy(state) } -> std::convertible_to<double>;
    { sys.propose(state, double{}, std::size_t{}, double{}, rng, out) } -> std::same_as<std::optional<double>>;
};

struct ChainStats {
    double beta = 0.0;
    /// Energy after every measured sweep.
    std::vector<double> energies;
    /// Frozen proposal scale per move kind.
    std::vector<double> steps;
    std::size_t proposed = 0;
    std::size_t accepted = 0;
    std::size_t outside = 0; // proposals rejected by the constraint

    double acceptance() const { return proposed == 0 ? 0.0 : static_cast<double>(accepted) / proposed; }
};

template <typename State>
struct ExchangeResult {
    std::vector<ChainStats> chains;
    /// Acceptance of swaps between chains k and k + 1.
    std::vector<double> swap_acceptance;
    /// Thinned samples per chain (empty unless recorded).
    std::vector<std::vector<State>> samples;
    std::vector<State> final_states;
    /// Some adjacent pair swapped less than 5% of the time.
    bool poor_mixing = false;
};

/// Replica-exchange Metropolis over an ascending beta grid.
///
/// Chain k draws from its own stream derive_seed(seed, k). One sweep
/// attempts every move kind once per chain, then swaps each adjacent pair
/// (k, k + 1) in order of k using chain k's stream. Step sizes adapt only
/// during burn-in and are frozen afterwards.
template <SamplerSystem System, typename Init>
ExchangeResult<typename System::State> replica_exchange(const System& system, std::span<const double> betas,
                                                        const SamplerConfig& config, std::uint64_t seed, Init&& init) {
    using State = typename System::State;
    config.validate();
    if (betas.empty()) throw std::invalid_argument("replica_exchange: empty beta grid");
    if (!std::is_sorted(betas.begin(), betas.end()))
        throw std::invalid_argument("replica_exchange: beta grid must be ascending");

    const std::size_t chains = betas.size();
    const std::size_t kinds = system.move_kinds();
    std::vector<Rng> rngs;
    std::vector<State> states;
    std::vector<double> energy(chains);
    ExchangeResult<State> out;
    out.chains.resize(chains);
    out.samples.resize(chains);
    for (std::size_t k = 0; k < chains; ++k) {
        rngs.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(k)));
        states.push_back(init(k, rngs.back()));
        energy[k] = system.energy(states.back());
        out.chains[k].beta = betas[k];
        out.chains[k].steps.assign(kinds, config.initial_step);
        out.chains[k].energies.reserve(config.sweeps);
    }

    std::vector<std::size_t> window_tries(chains * kinds, 0), window_hits(chains * kinds, 0);
    std::vector<std::size_t> swap_tries(chains > 1 ? chains - 1 : 0, 0), swap_hits(swap_tries.size(), 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    State proposal = states.front();

    const std::size_t total = config.burn_in + config.sweeps;
    for (std::size_t sweep = 0; sweep < total; ++sweep) {
        const bool measuring = sweep >= config.burn_in;
        for (std::size_t k = 0; k < chains; ++k) {
            ChainStats& stats = out.chains[k];
            for (std::size_t kind = 0; kind < kinds; ++kind) {
                const auto e = system.propose(states[k], energy[k], kind, stats.steps[kind], rngs[k], proposal);
                bool accept = false;
                if (e) {
                    const double log_ratio = betas[k] * (*e - energy[k]);
                    accept = log_ratio >= 0.0 || std::log(unit(rngs[k])) < log_ratio;
                }
                if (accept) {
                    std::swap(states[k], proposal);
                    energy[k] = *e;
                }
                if (measuring) {
                    ++stats.proposed;
                    stats.accepted += accept ? 1 : 0;
                    stats.outside += e ? 0 : 1;
                } else {
                    ++window_tries[k * kinds + kind];
                    window_hits[k * kinds + kind] += accept ? 1 : 0;
                }
            }
        }

        for (std::size_t k = 0; k + 1 < chains; ++k) {
            const double log_ratio = (betas[k + 1] - betas[k]) * (energy[k] - energy[k + 1]);
            const bool accept = log_ratio >= 0.0 || std::log(unit(rngs[k])) < log_ratio;
            if (accept) {
                std::swap(states[k], states[k + 1]);
                std::swap(energy[k], energy[k + 1]);
            }
            if (measuring) {
                ++swap_tries[k];
                swap_hits[k] += accept ? 1 : 0;
            }
        }

        if (!measuring && (sweep + 1) % config.adapt_interval == 0) {
            for (std::size_t k = 0; k < chains; ++k)
                for (std::size_t kind = 0; kind < kinds; ++kind) {
                    const std::size_t slot = k * kinds + kind;
                    if (!system.adaptive(kind) || window_tries[slot] == 0) continue;
                    const double rate = static_cast<double>(window_hits[slot]) / window_tries[slot];
                    double& step = out.chains[k].steps[kind];
                    step = std::clamp(step * std::exp(rate - config.target_acceptance), 1e-6, 3.14159);
                    window_tries[slot] = window_hits[slot] = 0;
                }
        }

        if (measuring) {
            for (std::size_t k = 0; k < chains; ++k) {
                out.chains[k].energies.push_back(energy[k]);
                if (config.record_samples && (sweep - config.burn_in + 1) % config.thin == 0)
                    out.samples[k].push_back(states[k]);
            }
        }
    }

    out.swap_acceptance.resize(swap_tries.size());
    for (std::size_t k = 0; k < swap_tries.size(); ++k) {
        out.swap_acceptance[k] = swap_tries[k] == 0 ? 0.0 : static_cast<double>(swap_hits[k]) / swap_tries[k];
        if (out.swap_acceptance[k] < 0.05) out.poor_mixing = true;
    }
    out.final_states = std::move(states);
    return out;
}

/// n replicas on S_N with target exp(beta sum_i (H(sigma^i) - offset)),
/// optionally restricted to B(m, delta) and, for n >= 2, to pairwise
/// overlaps within rho of R(m, m).
///
/// Move kind i * S + s perturbs species s of replica i: a sign flip when
/// N_s = 1, otherwise a Gaussian step of scale `step` in the tangent space
/// followed by re-projection onto the sphere of radius sqrt(N_s). With two
/// or more replicas, kind n * S + s moves species s of every replica by the
/// same rotation (a joint sign flip when N_s = 1, otherwise a Givens rotation
/// in a random coordinate plane by a Gaussian angle), which keeps the
/// pairwise overlaps fixed.
class ReplicaSphereSystem {
public:
    struct State {
        std::vector<double> coords;   // n * N, replica-major
        std::vector<double> energies; // H(sigma^i) per replica
    };

    /// Unconstrained: one or more independent replicas on S_N.
    ReplicaSphereSystem(const HamiltonianInstance& h, std::size_t replicas);
    /// Band-restricted around `center`, energies measured from H(center).
    ReplicaSphereSystem(const HamiltonianInstance& h, const BandSpec& band);

    std::size_t replicas() const noexcept { return replicas_; }
    std::size_t dimension() const noexcept { return layout_->dimension(); }
    std::size_t move_kinds() const noexcept {
        return (replicas_ > 1 ? replicas_ + 1 : 1) * layout_->species();
    }
    bool adaptive(std::size_t kind) const { return layout_->size(kind % layout_->species()) > 1; }
    double energy(const State& state) const;
    std::optional<double> propose(const State& current, double current_energy, std::size_t kind, double step, Rng& rng,
                                  State& out) const;

    /// Builds a state from replica coordinates, checking admissibility.
    State make_state(std::span<const Configuration> replicas) const;
    /// Uniform admissible start: exact band draws with pair rejection.
    State random_state(Rng& rng, std::size_t max_tries = 100000) const;
    bool admissible(const State& state) const;

    Configuration replica(const State& state, std::size_t i) const;
    double offset() const noexcept { return offset_; }

private:
    bool block_ok(std::span<const double> coords, std::size_t i, std::size_t s) const;
    std::optional<double> propose_collective(const State& current, double current_energy, std::size_t s, double step,
                                             Rng& rng, State& out) const;

    const HamiltonianInstance* h_;
    LayoutPtr layout_;
    std::size_t replicas_ = 1;
    std::optional<Configuration> center_;
    std::vector<double> center_overlap_; // R_s(m, m)
    double delta_ = 0.0;
    double rho_ = 0.0;
    double offset_ = 0.0;
};

} // namespace pspin
