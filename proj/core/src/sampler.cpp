#include "pspin/sampler.hpp"

namespace pspin {

void SamplerConfig::validate() const {
    if (thin == 0) throw std::invalid_argument("sampler: thin must be >= 1");
    if (adapt_interval == 0) throw std::invalid_argument("sampler: adapt_interval must be >= 1");
    if (!(initial_step > 0.0)) throw std::invalid_argument("sampler: initial_step must be > 0");
    if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
        throw std::invalid_argument("sampler: target_acceptance must lie in (0, 1)");
    if (batches < 2) throw std::invalid_argument("sampler: need at least two batches");
}

ReplicaSphereSystem::ReplicaSphereSystem(const HamiltonianInstance& h, std::size_t replicas)
    : h_(&h), layout_(h.layout_ptr()), replicas_(replicas) {
    if (replicas_ == 0) throw std::invalid_argument("sampler: need at least one replica");
}

ReplicaSphereSystem::ReplicaSphereSystem(const HamiltonianInstance& h, const BandSpec& band)
    : h_(&h), layout_(h.layout_ptr()), replicas_(band.n), center_(band.center), delta_(band.delta), rho_(band.rho) {
    band.validate();
    if (band.center.layout() != h.layout()) throw std::invalid_argument("sampler: band centre layout mismatch");
    const auto q = self_overlap(band.center);
    center_overlap_.assign(q.begin(), q.end());
    offset_ = h.energy(band.center);
}

double ReplicaSphereSystem::energy(const State& state) const {
    double total = 0.0;
    for (double e : state.energies) total += e - offset_;
    return total;
}

bool ReplicaSphereSystem::block_ok(std::span<const double> coords, std::size_t i, std::size_t s) const {
    if (!center_) return true;
    const std::size_t n = layout_->dimension();
    const std::span<const double> sigma = coords.subspan(i * n, n);
    const double q = center_overlap_[s];
    if (std::abs(overlap_species(*layout_, s, sigma, center_->coords()) - q) > delta_) return false;
    for (std::size_t j = 0; j < replicas_; ++j) {
        if (j == i) continue;
        if (std::abs(overlap_species(*layout_, s, sigma, coords.subspan(j * n, n)) - q) > rho_) return false;
    }
    return true;
}

std::optional<double> ReplicaSphereSystem::propose(const State& current, double current_energy, std::size_t kind,
                                                   double step, Rng& rng, State& out) const {
    const std::size_t species = layout_->species();
    const std::size_t i = kind / species, s = kind % species;
    if (i == replicas_) return propose_collective(current, current_energy, s, step, rng, out);
    const std::size_t n = layout_->dimension();
    out.coords = current.coords;
    out.energies = current.energies;

    const std::size_t lo = i * n + layout_->offset(s), n_s = layout_->size(s);
    std::span<double> block(out.coords.data() + lo, n_s);
    if (n_s == 1) {
        block[0] = -block[0];
    } else {
        std::normal_distribution<double> gauss(0.0, step);
        const double radius_sq = static_cast<double>(n_s);
        std::vector<double> v(n_s);
        double along = 0.0;
        for (std::size_t j = 0; j < n_s; ++j) {
            v[j] = gauss(rng);
            along += v[j] * block[j];
        }
        // Tangent step, then back onto the sphere.
        double norm_sq = 0.0;
        for (std::size_t j = 0; j < n_s; ++j) {
            block[j] += v[j] - along / radius_sq * block[j];
            norm_sq += block[j] * block[j];
        }
        const double scale = std::sqrt(radius_sq / norm_sq);
        for (double& x : block) x *= scale;
    }
    if (!block_ok(out.coords, i, s)) return std::nullopt;

    const double e = h_->energy(std::span<const double>(out.coords).subspan(i * n, n));
    out.energies[i] = e;
    return current_energy + (e - current.energies[i]);
}

std::optional<double> ReplicaSphereSystem::propose_collective(const State& current, double current_energy,
                                                              std::size_t s, double step, Rng& rng,
                                                              State& out) const {
    const std::size_t n = layout_->dimension();
    const std::size_t n_s = layout_->size(s);
    out.coords = current.coords;
    out.energies = current.energies;

    std::size_t a = 0, b = 0;
    double c = -1.0, sn = 0.0;
    if (n_s > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, n_s - 1);
        a = pick(rng);
        do b = pick(rng);
        while (b == a);
        const double theta = std::normal_distribution<double>(0.0, step)(rng);
        c = std::cos(theta);
        sn = std::sin(theta);
    }
    for (std::size_t i = 0; i < replicas_; ++i) {
        std::span<double> block(out.coords.data() + i * n + layout_->offset(s), n_s);
        if (n_s == 1) {
            block[0] = -block[0];
            continue;
        }
        const double xa = block[a], xb = block[b];
        block[a] = c * xa - sn * xb;
        block[b] = sn * xa + c * xb;
    }
    for (std::size_t i = 0; i < replicas_; ++i)
        if (!block_ok(out.coords, i, s)) return std::nullopt;

    double e = current_energy;
    for (std::size_t i = 0; i < replicas_; ++i) {
        out.energies[i] = h_->energy(std::span<const double>(out.coords).subspan(i * n, n));
        e += out.energies[i] - current.energies[i];
    }
    return e;
}

bool ReplicaSphereSystem::admissible(const State& state) const {
    for (std::size_t i = 0; i < replicas_; ++i)
        for (std::size_t s = 0; s < layout_->species(); ++s)
            if (!block_ok(state.coords, i, s)) return false;
    return true;
}

ReplicaSphereSystem::State ReplicaSphereSystem::make_state(std::span<const Configuration> replicas) const {
    if (replicas.size() != replicas_) throw std::invalid_argument("sampler: replica count mismatch");
    const std::size_t n = layout_->dimension();
    State state;
    state.coords.reserve(replicas_ * n);
    for (const auto& r : replicas) {
        if (r.layout() != *layout_) throw std::invalid_argument("sampler: replica layout mismatch");
        state.coords.insert(state.coords.end(), r.coords().begin(), r.coords().end());
        state.energies.push_back(h_->energy(r));
    }
    if (!admissible(state)) throw std::invalid_argument("sampler: initial replicas are not admissible");
    return state;
}

ReplicaSphereSystem::State ReplicaSphereSystem::random_state(Rng& rng, std::size_t max_tries) const {
    std::vector<Configuration> reps;
    State probe;
    for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
        reps.clear();
        probe.coords.clear();
        for (std::size_t i = 0; i < replicas_; ++i) {
            reps.push_back(center_ ? sample_in_band(*center_, delta_, rng) : sample_uniform(layout_, rng));
            probe.coords.insert(probe.coords.end(), reps.back().coords().begin(), reps.back().coords().end());
        }
        if (admissible(probe)) return make_state(reps);
    }
    throw std::domain_error("sampler: no admissible replica tuple found");
}

Configuration ReplicaSphereSystem::replica(const State& state, std::size_t i) const {
    const std::size_t n = layout_->dimension();
    const auto first = state.coords.begin() + static_cast<std::ptrdiff_t>(i * n);
    return Configuration(layout_, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n)));
}

} // namespace pspin
