#include "pspin/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pspin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp.
class LogAccumulator {
public:
    void add(double v) {
        if (v == kNegInf) return;
        if (v > max_) {
            sum_ = sum_ * std::exp(max_ - v) + 1.0;
            max_ = v;
        } else {
            sum_ += std::exp(v - max_);
        }
    }
    double value() const { return sum_ == 0.0 ? kNegInf : max_ + std::log(sum_); }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

void require_tensor(const HamiltonianInstance& h, const char* what) {
    if (h.backend() != Backend::tensor) throw std::invalid_argument(std::string(what) + ": needs the tensor backend");
}

void require_corner(const HamiltonianInstance& h, const char* what) {
    require_tensor(h, what);
    for (std::size_t n_s : h.layout().sizes())
        if (n_s != 1) throw std::invalid_argument(std::string(what) + ": every species must have N_s = 1");
    if (h.layout().species() > 20) throw std::invalid_argument(std::string(what) + ": too many species to enumerate");
}

std::vector<std::vector<double>> sign_patterns(std::size_t species) {
    std::vector<std::vector<double>> out;
    for (std::size_t bits = 0; bits < (std::size_t{1} << species); ++bits) {
        std::vector<double> x(species);
        for (std::size_t s = 0; s < species; ++s) x[s] = (bits >> s) & 1U ? -1.0 : 1.0;
        out.push_back(std::move(x));
    }
    return out;
}

bool corner_in_band(std::span<const double> sigma, std::span<const double> m, double delta) {
    for (std::size_t s = 0; s < sigma.size(); ++s)
        if (std::abs(sigma[s] * m[s] - m[s] * m[s]) > delta) return false;
    return true;
}

bool corner_pairs_ok(const std::vector<const std::vector<double>*>& tuple, std::span<const double> m, double rho) {
    for (std::size_t i = 0; i < tuple.size(); ++i)
        for (std::size_t j = i + 1; j < tuple.size(); ++j)
            for (std::size_t s = 0; s < m.size(); ++s)
                if (std::abs((*tuple[i])[s] * (*tuple[j])[s] - m[s] * m[s]) > rho) return false;
    return true;
}

// Calls fn on every n-tuple of indices into [0, count).
template <typename Fn>
void for_each_tuple(std::size_t count, std::size_t n, Fn&& fn) {
    std::vector<std::size_t> idx(n, 0);
    while (true) {
        fn(idx);
        std::size_t d = 0;
        while (d < n && ++idx[d] == count) idx[d++] = 0;
        if (d == n) return;
    }
}

struct SpeciesNodes {
    std::vector<std::vector<double>> points; // block coordinates
    std::vector<double> log_weights;
};

SpeciesNodes species_nodes(std::size_t n_s, std::size_t k) {
    SpeciesNodes out;
    const double r = std::sqrt(static_cast<double>(n_s));
    if (n_s == 1) {
        out.points = {{1.0}, {-1.0}};
        out.log_weights = {std::log(0.5), std::log(0.5)};
    } else if (n_s == 2) {
        for (std::size_t j = 0; j < k; ++j) {
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(k);
            out.points.push_back({r * std::cos(phi), r * std::sin(phi)});
            out.log_weights.push_back(-std::log(static_cast<double>(k)));
        }
    } else {
        // The height z = cos(theta) is uniform on [-1, 1] for the 2-sphere.
        const QuadratureRule rule = gauss_legendre(k);
        const std::size_t az = 2 * k;
        for (std::size_t a = 0; a < k; ++a) {
            const double z = rule.nodes[a], rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            for (std::size_t j = 0; j < az; ++j) {
                const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(az);
                out.points.push_back({r * rho * std::cos(phi), r * rho * std::sin(phi), r * z});
                out.log_weights.push_back(std::log(0.5 * rule.weights[a]) - std::log(static_cast<double>(az)));
            }
        }
    }
    return out;
}

double quadrature_points(const SpeciesLayout& layout, std::size_t k) {
    double total = 1.0;
    for (std::size_t n_s : layout.sizes()) total *= n_s == 1 ? 2.0 : n_s == 2 ? k : 2.0 * k * k;
    return total;
}

double quadrature_log_mean(const HamiltonianInstance& h, std::size_t k) {
    const auto& layout = h.layout();
    std::vector<SpeciesNodes> nodes;
    for (std::size_t n_s : layout.sizes()) nodes.push_back(species_nodes(n_s, k));
    std::vector<double> x(layout.dimension());
    LogAccumulator acc;
    std::vector<std::size_t> idx(nodes.size(), 0);
    while (true) {
        double lw = 0.0;
        for (std::size_t s = 0; s < nodes.size(); ++s) {
            const auto& p = nodes[s].points[idx[s]];
            std::copy(p.begin(), p.end(), x.begin() + static_cast<std::ptrdiff_t>(layout.offset(s)));
            lw += nodes[s].log_weights[idx[s]];
        }
        acc.add(lw + h.energy(x));
        std::size_t d = 0;
        while (d < nodes.size() && ++idx[d] == nodes[d].points.size()) idx[d++] = 0;
        if (d == nodes.size()) break;
    }
    return acc.value();
}

void require_grid(std::span<const double> betas) {
    if (betas.empty()) throw std::invalid_argument("thermo: empty beta grid");
    if (betas.front() != 0.0) throw std::invalid_argument("thermo: beta grid must start at 0");
    for (std::size_t k = 1; k < betas.size(); ++k)
        if (!(betas[k] > betas[k - 1])) throw std::invalid_argument("thermo: beta grid must be strictly ascending");
}

// Thermodynamic integration of sys from beta = 0, where the integral
// equals base_value, up to betas.back().
FreeEnergyEstimate integrate_system(const ReplicaSphereSystem& sys, std::span<const double> betas,
                                    const SamplerConfig& config, Rng& rng, double base_value, double base_error) {
    require_grid(betas);
    const std::uint64_t seed = rng();
    const double scale = static_cast<double>(sys.dimension() * sys.replicas());
    auto run = replica_exchange(sys, betas, config, seed,
                                [&](std::size_t, Rng& chain_rng) { return sys.random_state(chain_rng); });

    std::vector<double> means, errors;
    nlohmann::json acceptance = nlohmann::json::array();
    bool frozen = false;
    for (const auto& c : run.chains) {
        means.push_back(mean(c.energies) / scale);
        errors.push_back(batch_means_error(c.energies, config.batches) / scale);
        acceptance.push_back(c.acceptance());
        if (c.acceptance() < 1e-3) frozen = true;
    }
    CurveIntegral ti = integrate_curve(betas, means, errors);
    // Swaps correlate neighbouring chains, so the Monte Carlo error comes from
    // batch means of the per-sweep weighted sum rather than per-node errors.
    const auto weights = simpson_weights(betas);
    std::vector<double> series(config.sweeps, 0.0);
    for (std::size_t k = 0; k < run.chains.size(); ++k)
        for (std::size_t t = 0; t < config.sweeps; ++t) series[t] += weights[k] * run.chains[k].energies[t] / scale;
    ti.mc_error = batch_means_error(series, config.batches);

    FreeEnergyEstimate est;
    est.method = Method::thermo_integration;
    est.value = base_value + ti.value;
    est.std_error = base_error + ti.mc_error + ti.grid_error;
    if (run.poor_mixing) est.flag("poor_mixing");
    if (frozen) est.flag("frozen_chain");
    est.meta = {{"replicas", sys.replicas()},
                {"beta_grid", std::vector<double>(betas.begin(), betas.end())},
                {"burn_in", config.burn_in},
                {"sweeps", config.sweeps},
                {"mean_energy_per_spin", means},
                {"node_std_error", errors},
                {"acceptance", acceptance},
                {"swap_acceptance", run.swap_acceptance},
                {"mc_error", ti.mc_error},
                {"grid_error", ti.grid_error},
                {"base_value", base_value},
                {"base_error", base_error}};
    return est;
}

} // namespace

const char* to_string(Method method) {
    switch (method) {
    case Method::enumeration: return "enumeration";
    case Method::quadrature: return "quadrature";
    case Method::thermo_integration: return "thermo-integration";
    }
    return "unknown";
}

bool FreeEnergyEstimate::flagged(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void FreeEnergyEstimate::flag(std::string f) {
    if (!flagged(f)) flags.push_back(std::move(f));
}

FreeEnergyEstimate exact_fe_enumeration(const HamiltonianInstance& h) {
    require_corner(h, "exact_fe_enumeration");
    const auto patterns = sign_patterns(h.layout().species());
    LogAccumulator acc;
    for (const auto& x : patterns) acc.add(h.energy(x));
    FreeEnergyEstimate est;
    est.method = Method::enumeration;
    est.value = (acc.value() - std::log(static_cast<double>(patterns.size()))) / static_cast<double>(h.dimension());
    est.meta = {{"configurations", patterns.size()}};
    return est;
}

FreeEnergyEstimate exact_fe_quadrature(const HamiltonianInstance& h, std::size_t nodes_per_angle, double tolerance,
                                       std::size_t max_points) {
    require_tensor(h, "exact_fe_quadrature");
    const auto& layout = h.layout();
    std::size_t angular = 0;
    for (std::size_t n_s : layout.sizes()) {
        if (n_s > 3) throw std::invalid_argument("exact_fe_quadrature: species larger than 3");
        angular += n_s - 1;
    }
    if (angular > 6) throw std::invalid_argument("exact_fe_quadrature: angular dimension above 6");
    if (nodes_per_angle < 2) throw std::invalid_argument("exact_fe_quadrature: need at least 2 nodes per angle");

    const double n = static_cast<double>(layout.dimension());
    std::size_t k = nodes_per_angle;
    double value = quadrature_log_mean(h, k) / n;
    double change = std::numeric_limits<double>::infinity();
    bool converged = angular == 0;
    if (converged) change = 0.0;
    while (!converged) {
        if (quadrature_points(layout, 2 * k) > static_cast<double>(max_points)) break;
        const double refined = quadrature_log_mean(h, 2 * k) / n;
        change = std::abs(refined - value);
        value = refined;
        k *= 2;
        converged = change <= tolerance;
    }

    FreeEnergyEstimate est;
    est.method = Method::quadrature;
    est.value = value;
    if (!converged) est.flag("not_converged");
    est.meta = {{"nodes_per_angle", k}, {"last_change", change}, {"points", quadrature_points(layout, k)}};
    return est;
}

FreeEnergyEstimate exact_restricted_fe_enumeration(const HamiltonianInstance& h, const Configuration& m,
                                                   double delta) {
    require_corner(h, "exact_restricted_fe_enumeration");
    const auto patterns = sign_patterns(h.layout().species());
    const double hm = h.energy(m);
    LogAccumulator acc;
    std::size_t inside = 0;
    for (const auto& x : patterns) {
        if (!corner_in_band(x, m.coords(), delta)) continue;
        acc.add(h.energy(x) - hm);
        ++inside;
    }
    FreeEnergyEstimate est;
    est.method = Method::enumeration;
    est.value = (acc.value() - std::log(static_cast<double>(patterns.size()))) / static_cast<double>(h.dimension());
    est.meta = {{"configurations_in_band", inside}};
    return est;
}

FreeEnergyEstimate exact_multi_replica_fe_enumeration(const HamiltonianInstance& h, const BandSpec& spec) {
    require_corner(h, "exact_multi_replica_fe_enumeration");
    spec.validate();
    const auto patterns = sign_patterns(h.layout().species());
    const double hm = h.energy(spec.center);
    std::vector<double> energy;
    for (const auto& x : patterns) energy.push_back(h.energy(x) - hm);

    LogAccumulator acc;
    std::size_t admitted = 0;
    std::vector<const std::vector<double>*> tuple(spec.n);
    for_each_tuple(patterns.size(), spec.n, [&](const std::vector<std::size_t>& idx) {
        double total = 0.0;
        for (std::size_t i = 0; i < spec.n; ++i) {
            if (!corner_in_band(patterns[idx[i]], spec.center.coords(), spec.delta)) return;
            tuple[i] = &patterns[idx[i]];
            total += energy[idx[i]];
        }
        if (!corner_pairs_ok(tuple, spec.center.coords(), spec.rho)) return;
        acc.add(total);
        ++admitted;
    });
    const double nn = static_cast<double>(h.dimension() * spec.n);
    FreeEnergyEstimate est;
    est.method = Method::enumeration;
    est.value = (acc.value() - static_cast<double>(spec.n) * std::log(static_cast<double>(patterns.size()))) / nn;
    est.meta = {{"tuples_admitted", admitted}};
    return est;
}

double exact_pair_constraint_log_probability(const HamiltonianInstance& h, const BandSpec& spec) {
    require_corner(h, "exact_pair_constraint_log_probability");
    spec.validate();
    const auto patterns = sign_patterns(h.layout().species());
    const double hm = h.energy(spec.center);

    // Gibbs weights restricted to the band, normalized.
    std::vector<double> log_w(patterns.size(), kNegInf);
    LogAccumulator norm;
    for (std::size_t a = 0; a < patterns.size(); ++a) {
        if (!corner_in_band(patterns[a], spec.center.coords(), spec.delta)) continue;
        log_w[a] = h.energy(patterns[a]) - hm;
        norm.add(log_w[a]);
    }
    const double log_norm = norm.value();
    LogAccumulator hit;
    std::vector<const std::vector<double>*> tuple(spec.n);
    for_each_tuple(patterns.size(), spec.n, [&](const std::vector<std::size_t>& idx) {
        double lw = 0.0;
        for (std::size_t i = 0; i < spec.n; ++i) {
            if (log_w[idx[i]] == kNegInf) return;
            lw += log_w[idx[i]] - log_norm;
            tuple[i] = &patterns[idx[i]];
        }
        if (corner_pairs_ok(tuple, spec.center.coords(), spec.rho)) hit.add(lw);
    });
    return hit.value();
}

GibbsSamples pt_sampler(const HamiltonianInstance& h, std::span<const double> betas, const SamplerConfig& config,
                        Rng& rng) {
    require_tensor(h, "pt_sampler");
    SamplerConfig recording = config;
    recording.record_samples = true;
    const ReplicaSphereSystem sys(h, 1);
    const std::uint64_t seed = rng();
    auto run = replica_exchange(sys, betas, recording, seed,
                                [&](std::size_t, Rng& chain_rng) { return sys.random_state(chain_rng); });
    GibbsSamples out;
    out.betas.assign(betas.begin(), betas.end());
    for (const auto& chain : run.samples) {
        std::vector<Configuration> configs;
        configs.reserve(chain.size());
        for (const auto& state : chain) configs.push_back(sys.replica(state, 0));
        out.samples.push_back(std::move(configs));
    }
    out.chains = std::move(run.chains);
    out.swap_acceptance = std::move(run.swap_acceptance);
    out.poor_mixing = run.poor_mixing;
    return out;
}

CurveIntegral integrate_curve(std::span<const double> grid, std::span<const double> values,
                              std::span<const double> errors) {
    if (grid.size() != values.size() || grid.size() != errors.size())
        throw std::invalid_argument("integrate_curve: size mismatch");
    const auto simpson = simpson_weights(grid);
    const auto trapezoid = trapezoid_weights(grid);
    CurveIntegral out;
    double trap = 0.0, var = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out.value += simpson[k] * values[k];
        trap += trapezoid[k] * values[k];
        var += simpson[k] * simpson[k] * errors[k] * errors[k];
    }
    out.mc_error = std::sqrt(var);
    out.grid_error = std::abs(out.value - trap);
    return out;
}

FreeEnergyEstimate fe_thermo_integration(const HamiltonianInstance& h, std::span<const double> betas,
                                         const SamplerConfig& config, Rng& rng) {
    require_tensor(h, "fe_thermo_integration");
    return integrate_system(ReplicaSphereSystem(h, 1), betas, config, rng, 0.0, 0.0);
}

FreeEnergyEstimate restricted_fe(const HamiltonianInstance& h, const Configuration& m, double delta,
                                 std::span<const double> betas, const SamplerConfig& config, Rng& rng) {
    return multi_replica_fe(h, BandSpec{m, delta, 1, 0.0}, betas, config, rng);
}

FreeEnergyEstimate multi_replica_fe(const HamiltonianInstance& h, const BandSpec& spec, std::span<const double> betas,
                                    const SamplerConfig& config, Rng& rng, std::size_t pair_draws) {
    require_tensor(h, "multi_replica_fe");
    spec.validate();
    const ReplicaSphereSystem sys(h, spec);
    const auto& layout = h.layout();
    const double n = static_cast<double>(layout.dimension());
    const double log_volume = log_band_volume(layout, self_overlap(spec.center), spec.delta);
    if (log_volume == kNegInf) throw std::domain_error("multi_replica_fe: the band is empty");

    double base = log_volume, base_error = 0.0;
    std::vector<std::string> flags;
    std::size_t pair_hits = pair_draws;
    if (spec.n > 1) {
        if (pair_draws == 0) throw std::invalid_argument("multi_replica_fe: need pair draws for n > 1");
        // Independent uniform band points: fraction meeting the pair constraint.
        Rng pair_rng(rng());
        pair_hits = 0;
        std::vector<Configuration> tuple;
        for (std::size_t t = 0; t < pair_draws; ++t) {
            tuple.clear();
            for (std::size_t i = 0; i < spec.n; ++i) tuple.push_back(sample_in_band(spec.center, spec.delta, pair_rng));
            if (in_multi_band(tuple, spec)) ++pair_hits;
        }
        double p = static_cast<double>(pair_hits) / static_cast<double>(pair_draws);
        if (pair_hits == 0) {
            p = 0.5 / static_cast<double>(pair_draws);
            flags.emplace_back("zero_pair_hits");
        }
        const double nn = n * static_cast<double>(spec.n);
        base += std::log(p) / nn;
        base_error = std::sqrt((1.0 - p) / (p * static_cast<double>(pair_draws))) / nn;
    }

    FreeEnergyEstimate est = integrate_system(sys, betas, config, rng, base, base_error);
    for (auto& f : flags) est.flag(f);
    est.meta["log_band_volume"] = log_volume;
    est.meta["pair_hits"] = pair_hits;
    est.meta["pair_draws"] = spec.n > 1 ? pair_draws : 0;
    return est;
}

MultisampEstimate multisamplability_profile(const HamiltonianInstance& h, const OverlapVector& q, std::size_t n,
                                            double eps, std::span<const double> betas, const SamplerConfig& config,
                                            Rng& rng) {
    require_tensor(h, "multisamplability_profile");
    if (n < 2) throw std::invalid_argument("multisamplability_profile: need n >= 2");
    require_shell_parameter(q, h.layout().species());
    require_grid(betas);
    MultisampEstimate out;
    if (eps >= 2.0) {
        // |R - q| < 2 always holds for R in [-1, 1] and q in [0, 1).
        out.flags.emplace_back("vacuous");
        return out;
    }

    std::vector<std::vector<Configuration>> runs;
    for (std::size_t i = 0; i < n; ++i) {
        GibbsSamples g = pt_sampler(h, betas, config, rng);
        if (g.poor_mixing) out.flags.emplace_back("poor_mixing");
        runs.push_back(std::move(g.samples.back()));
    }
    out.trials = runs.front().size();
    if (out.trials == 0) throw std::invalid_argument("multisamplability_profile: no samples recorded");
    for (std::size_t t = 0; t < out.trials; ++t) {
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i)
            for (std::size_t j = i + 1; j < n && ok; ++j) {
                const auto r = overlap(runs[i][t], runs[j][t]);
                for (std::size_t s = 0; s < r.size() && ok; ++s) ok = std::abs(r[s] - q[s]) < eps;
            }
        out.hits += ok ? 1 : 0;
    }
    const double dim = static_cast<double>(h.dimension());
    const double trials = static_cast<double>(out.trials);
    const double floor = std::log(0.5 / trials) / dim;
    const Interval ci = wilson_interval(out.hits, out.trials);
    if (out.hits == 0) {
        out.value = floor;
        out.flags.emplace_back("zero_hits_floor");
    } else {
        out.value = std::log(static_cast<double>(out.hits) / trials) / dim;
    }
    out.lower = ci.lo > 0.0 ? std::max(floor, std::log(ci.lo) / dim) : floor;
    out.upper = std::log(ci.hi) / dim;
    std::sort(out.flags.begin(), out.flags.end());
    out.flags.erase(std::unique(out.flags.begin(), out.flags.end()), out.flags.end());
    return out;
}

std::vector<double> uniform_beta_grid(double beta_max, std::size_t nodes) {
    if (!(beta_max >= 0.0)) throw std::invalid_argument("uniform_beta_grid: beta_max must be >= 0");
    if (beta_max == 0.0 || nodes <= 1) return {0.0};
    std::vector<double> grid(nodes);
    for (std::size_t k = 0; k < nodes; ++k) grid[k] = beta_max * static_cast<double>(k) / static_cast<double>(nodes - 1);
    return grid;
}

} // namespace pspin
