#include "pspin/tap.hpp"

#include "pspin/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace pspin {

namespace {

bool all_corners(const SpeciesLayout& layout) {
    for (std::size_t s = 0; s < layout.species(); ++s)
        if (layout.size(s) != 1) return false;
    return true;
}

bool small_quadrature(const SpeciesLayout& layout) {
    std::size_t angular = 0;
    for (std::size_t s = 0; s < layout.species(); ++s) {
        if (layout.size(s) > 3) return false;
        angular += layout.size(s) - 1;
    }
    return angular <= 3;
}

std::uint64_t instance_seed(const TapConfig& c, std::size_t i) {
    return derive_seed(c.master_seed, "instance/" + std::to_string(i));
}

std::uint64_t fq_seed(const TapConfig& c, std::size_t i) {
    return derive_seed(c.master_seed, "fq/" + std::to_string(i));
}

void merge_flags(std::vector<std::string>& into, const std::vector<std::string>& from) {
    into.insert(into.end(), from.begin(), from.end());
    std::sort(into.begin(), into.end());
    into.erase(std::unique(into.begin(), into.end()), into.end());
}

// Per-seed standard error, falling back to the Monte Carlo error for a
// single seed.
double seed_error(const std::vector<double>& values, double mc_error) {
    return values.size() < 2 ? mc_error : standard_error(values);
}

struct FeSample {
    double value = 0.0;
    double error = 0.0;
    Method method = Method::enumeration;
    std::vector<std::string> flags;
};

FeSample fe_sample(const HamiltonianInstance& h, const TapConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    const FreeEnergyEstimate e = evaluate_free_energy(h, config, rng);
    return {e.value, e.std_error, e.method, e.flags};
}

SeedAverage collect(const std::vector<FeSample>& samples) {
    std::vector<double> values, errors;
    std::vector<std::string> flags;
    for (const auto& s : samples) {
        values.push_back(s.value);
        errors.push_back(s.error);
        merge_flags(flags, s.flags);
    }
    return average_over_seeds(std::move(values), std::move(errors),
                              samples.empty() ? "" : to_string(samples.front().method), std::move(flags));
}

const char* gs_label(const HamiltonianInstance& h, const TapConfig& config) {
    const bool exact = config.gs_method == GsMethod::enumeration ||
                       (config.gs_method == GsMethod::automatic && all_corners(h.layout()));
    return exact ? "enumeration" : "ascent";
}

} // namespace

std::string q_key(const OverlapVector& q) {
    std::string key;
    char buf[32];
    for (std::size_t s = 0; s < q.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g", q[s]);
        if (s > 0) key += ',';
        key += buf;
    }
    return key;
}

const char* to_string(FeMethod method) {
    switch (method) {
    case FeMethod::automatic: return "auto";
    case FeMethod::enumeration: return "enumeration";
    case FeMethod::quadrature: return "quadrature";
    case FeMethod::thermo_integration: return "thermo-integration";
    }
    return "?";
}

const char* to_string(GsMethod method) {
    switch (method) {
    case GsMethod::automatic: return "auto";
    case GsMethod::enumeration: return "enumeration";
    case GsMethod::ascent: return "ascent";
    }
    return "?";
}

FeMethod fe_method_from_string(std::string_view name) {
    for (FeMethod m : {FeMethod::automatic, FeMethod::enumeration, FeMethod::quadrature, FeMethod::thermo_integration})
        if (name == to_string(m)) return m;
    throw std::invalid_argument("unknown free-energy method '" + std::string(name) + "'");
}

GsMethod gs_method_from_string(std::string_view name) {
    for (GsMethod m : {GsMethod::automatic, GsMethod::enumeration, GsMethod::ascent})
        if (name == to_string(m)) return m;
    throw std::invalid_argument("unknown ground-state method '" + std::string(name) + "'");
}

void TapConfig::validate() const {
    if (seeds == 0) throw std::invalid_argument("tap: need at least one seed");
    if (!(beta >= 0.0)) throw std::invalid_argument("tap: beta must be >= 0");
    if (beta_nodes < 2) throw std::invalid_argument("tap: need at least two beta nodes");
    if (!(gs_bias_allowance >= 0.0)) throw std::invalid_argument("tap: gs_bias_allowance must be >= 0");
    sampler.validate();
    ascent.validate();
}

FreeEnergyEstimate evaluate_free_energy(const HamiltonianInstance& h, const TapConfig& config, Rng& rng) {
    FeMethod method = config.fe_method;
    if (method == FeMethod::automatic)
        method = all_corners(h.layout())       ? FeMethod::enumeration
                 : small_quadrature(h.layout()) ? FeMethod::quadrature
                                                : FeMethod::thermo_integration;
    if (method == FeMethod::thermo_integration) {
        const auto grid = uniform_beta_grid(config.beta, config.beta_nodes);
        return fe_thermo_integration(h, grid, config.sampler, rng);
    }
    if (config.beta == 1.0)
        return method == FeMethod::enumeration ? exact_fe_enumeration(h)
                                               : exact_fe_quadrature(h, config.quadrature_nodes);
    // Same disorder, couplings scaled by beta.
    if (!h.field().empty()) throw std::invalid_argument("evaluate_free_energy: beta != 1 with an attached field");
    const HamiltonianInstance scaled =
        build_instance(scale_mixture(h.mixture(), config.beta), h.layout_ptr(), h.seed(), h.backend());
    return method == FeMethod::enumeration ? exact_fe_enumeration(scaled)
                                           : exact_fe_quadrature(scaled, config.quadrature_nodes);
}

double evaluate_ground_state(const HamiltonianInstance& h, const OverlapVector& q, const TapConfig& config, Rng& rng) {
    if (std::string_view(gs_label(h, config)) == "enumeration") return exact_gs_enumeration(h, q);
    AscentOptions options = config.ascent;
    options.workers = 1;
    return ascend(h, q, options, rng).energy_per_spin;
}

SeedAverage average_over_seeds(std::vector<double> values, std::vector<double> mc_errors, std::string method,
                               std::vector<std::string> flags) {
    if (values.size() != mc_errors.size()) throw std::invalid_argument("average_over_seeds: size mismatch");
    SeedAverage out;
    double mc = 0.0;
    for (double e : mc_errors) mc += e * e;
    out.mc_error = values.empty() ? 0.0 : std::sqrt(mc) / static_cast<double>(values.size());
    out.mean = mean(values);
    out.std_error = seed_error(values, out.mc_error);
    out.values = std::move(values);
    out.method = std::move(method);
    out.flags = std::move(flags);
    return out;
}

bool TapReport::inequality_holds(double allowance) const { return gap >= -(3.0 * gap_se + allowance); }

std::vector<TapReport> tap_inequality_scan(const Mixture& xi, const LayoutPtr& layout,
                                           const std::vector<OverlapVector>& q_grid, const TapConfig& config) {
    config.validate();
    for (const auto& q : q_grid) {
        require_shell_parameter(q, layout->species());
        for (double v : q)
            if (v >= 1.0) throw std::invalid_argument("tap: q(s) must be < 1");
    }
    const std::size_t k = config.seeds, m = q_grid.size();
    std::vector<Mixture> shifted;
    for (const auto& q : q_grid) shifted.push_back(xi_q(xi, q));

    std::vector<FeSample> lhs(k);
    std::vector<std::vector<FeSample>> fq(m, std::vector<FeSample>(k));
    std::vector<std::vector<double>> gs(m, std::vector<double>(k));
    std::vector<std::string> gs_method(1);

    parallel_for(k, config.workers, [&](std::size_t i) {
        const std::uint64_t si = instance_seed(config, i), fi = fq_seed(config, i);
        const HamiltonianInstance h = build_instance(xi, layout, si);
        lhs[i] = fe_sample(h, config, derive_seed(si, "lhs"));
        for (std::size_t j = 0; j < m; ++j) {
            const std::string key = q_key(q_grid[j]);
            Rng gs_rng(derive_seed(si, "gs/" + key));
            gs[j][i] = evaluate_ground_state(h, q_grid[j], config, gs_rng);
            const HamiltonianInstance hq = build_instance(shifted[j], layout, fi);
            fq[j][i] = fe_sample(hq, config, derive_seed(fi, "mc/" + key));
        }
        if (i == 0) gs_method[0] = gs_label(h, config);
    });

    const SeedAverage lhs_avg = collect(lhs);
    std::vector<TapReport> out;
    for (std::size_t j = 0; j < m; ++j) {
        TapReport r;
        r.q = q_grid[j];
        r.seeds = k;
        r.lhs = lhs_avg;
        r.gs = average_over_seeds(gs[j], std::vector<double>(k, 0.0), gs_method[0], {});
        r.fq = collect(fq[j]);
        r.logvol = log_volume_term(*layout, q_grid[j]);
        r.onsager = onsager_term(xi, q_grid[j]);
        r.gap = r.lhs.mean - (r.gs.mean + r.logvol + r.fq.mean);
        std::vector<double> d(k);
        for (std::size_t i = 0; i < k; ++i) d[i] = lhs[i].value - gs[j][i] - r.logvol - fq[j][i].value;
        r.gap_mc_error = std::hypot(r.lhs.mc_error, r.fq.mc_error);
        r.gap_se = seed_error(d, r.gap_mc_error);
        merge_flags(r.flags, r.lhs.flags);
        merge_flags(r.flags, r.fq.flags);
        if (r.gs.method == "ascent") merge_flags(r.flags, {"gs_lower_bound"});
        out.push_back(std::move(r));
    }
    return out;
}

TapReport tap_evaluate(const Mixture& xi, const LayoutPtr& layout, const OverlapVector& q, const TapConfig& config) {
    return tap_inequality_scan(xi, layout, {q}, config).front();
}

std::size_t argmin_abs_gap(const std::vector<TapReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("argmin_abs_gap: no reports");
    std::size_t best = 0;
    for (std::size_t j = 1; j < reports.size(); ++j)
        if (std::abs(reports[j].gap) < std::abs(reports[best].gap)) best = j;
    return best;
}

OnsagerReport onsager_check(const Mixture& xi, const LayoutPtr& layout, const OverlapVector& q_star,
                            const TapConfig& config) {
    config.validate();
    require_shell_parameter(q_star, layout->species());
    const Mixture shifted = xi_q(xi, q_star);
    const std::string key = q_key(q_star);
    std::vector<FeSample> fq(config.seeds);
    parallel_for(config.seeds, config.workers, [&](std::size_t i) {
        const std::uint64_t fi = fq_seed(config, i);
        fq[i] = fe_sample(build_instance(shifted, layout, fi), config, derive_seed(fi, "mc/" + key));
    });
    OnsagerReport r;
    r.q = q_star;
    r.fq = collect(fq);
    r.onsager = onsager_term(xi, q_star);
    r.difference = r.fq.mean - r.onsager;
    r.std_error = r.fq.std_error;
    r.within_3se = std::abs(r.difference) <= 3.0 * r.std_error + 1e-12;
    return r;
}

SymmetryReport replica_symmetry_diagnostic(const HamiltonianInstance& hq, std::size_t n, double tau,
                                           std::span<const double> betas, const SamplerConfig& config, Rng& rng) {
    if (n < 2) throw std::invalid_argument("replica_symmetry_diagnostic: need n >= 2");
    if (!(tau >= 0.0)) throw std::invalid_argument("replica_symmetry_diagnostic: tau must be >= 0");
    const std::size_t species = hq.layout().species();
    SymmetryReport out;
    out.tau = tau;
    out.frequency.assign(species, 0.0);
    if (tau > 1.0 + 1e-9) {
        // |R_s| <= 1 on the sphere.
        out.flags.emplace_back("vacuous");
        return out;
    }
    std::vector<std::vector<Configuration>> runs;
    for (std::size_t i = 0; i < n; ++i) {
        GibbsSamples g = pt_sampler(hq, betas, config, rng);
        if (g.poor_mixing) merge_flags(out.flags, {"poor_mixing"});
        runs.push_back(std::move(g.samples.back()));
    }
    const std::size_t samples = runs.front().size();
    std::vector<std::size_t> hits(species, 0);
    for (std::size_t t = 0; t < samples; ++t)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const auto r = overlap(runs[i][t], runs[j][t]);
                for (std::size_t s = 0; s < species; ++s) hits[s] += std::abs(r[s]) >= tau ? 1 : 0;
                ++out.pairs;
            }
    if (out.pairs == 0) throw std::invalid_argument("replica_symmetry_diagnostic: no samples recorded");
    for (std::size_t s = 0; s < species; ++s)
        out.frequency[s] = static_cast<double>(hits[s]) / static_cast<double>(out.pairs);
    return out;
}

NestingReport nesting_experiment(const Mixture& xi, const LayoutPtr& layout, const OverlapVector& q,
                                 const OverlapVector& q_prime, const TapConfig& config) {
    config.validate();
    NestingReport r;
    r.q = q;
    r.q_prime = q_prime;
    r.q_hat = nesting_compose(q, q_prime);
    r.logvol_error = std::abs(log_volume_term(*layout, q) + log_volume_term(*layout, q_prime) -
                              log_volume_term(*layout, r.q_hat));

    const Mixture shifted = xi_q(xi, q);
    const Mixture twice = xi_q(shifted, q_prime);
    const Mixture direct = xi_q(xi, r.q_hat);
    std::set<MultiDegree> degrees;
    for (const auto& [p, c] : twice.terms()) degrees.insert(p);
    for (const auto& [p, c] : direct.terms()) degrees.insert(p);
    for (const auto& p : degrees)
        r.mixture_error = std::max(r.mixture_error, std::abs(twice.coefficient(p) - direct.coefficient(p)));

    const std::size_t k = config.seeds;
    std::vector<double> sum(k), hat(k);
    parallel_for(k, config.workers, [&](std::size_t i) {
        const std::uint64_t si = instance_seed(config, i), fi = fq_seed(config, i);
        const HamiltonianInstance h = build_instance(xi, layout, si);
        const HamiltonianInstance hq = build_instance(shifted, layout, fi);
        Rng a(derive_seed(si, "gs/" + q_key(q))), b(derive_seed(fi, "gs/" + q_key(q_prime))),
            c(derive_seed(si, "gs/" + q_key(r.q_hat)));
        sum[i] = evaluate_ground_state(h, q, config, a) + evaluate_ground_state(hq, q_prime, config, b);
        hat[i] = evaluate_ground_state(h, r.q_hat, config, c);
    });
    std::vector<double> margin(k);
    for (std::size_t i = 0; i < k; ++i) margin[i] = hat[i] - sum[i];
    r.gs_sum = average_over_seeds(sum, std::vector<double>(k, 0.0), "", {});
    r.gs_hat = average_over_seeds(hat, std::vector<double>(k, 0.0), "", {});
    r.gs_margin = r.gs_hat.mean - r.gs_sum.mean;
    r.gs_margin_se = standard_error(margin);
    r.gs_inequality_holds = r.gs_margin >= -(3.0 * r.gs_margin_se + config.gs_bias_allowance);
    return r;
}

} // namespace pspin
