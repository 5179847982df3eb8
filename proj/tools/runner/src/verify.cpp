#include "pspin/runner/commands.hpp"
#include "pspin/runner/output.hpp"

#include "pspin/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pspin::runner {

namespace {

using nlohmann::json;

struct Check {
    bool ok = true;
    double worst = 0.0;
    std::size_t cases = 0;

    // Relative comparison against max(1, |a|, |b|).
    void close(double a, double b, double tol) {
        const double err = std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
        worst = std::max(worst, err);
        ok = ok && err <= tol;
        ++cases;
    }

    void require(bool condition) {
        ok = ok && condition;
        ++cases;
    }

    CheckOutcome outcome(std::string name, const std::string& what) const {
        return {std::move(name), ok ? "pass" : "fail",
                what + ": worst " + format_number(worst) + " over " + std::to_string(cases) + " cases"};
    }
};

OverlapVector random_q(std::size_t species, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 0.95);
    std::vector<double> q(species);
    for (auto& v : q) v = u(rng);
    return OverlapVector(std::move(q));
}

std::vector<double> random_point(std::size_t species, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> x(species);
    for (auto& v : x) v = u(rng);
    return x;
}

// xi((1 - q) x + q) - xi(q).
double shifted_closed_form(const Mixture& xi, const OverlapVector& q, std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) y[s] = (1.0 - q[s]) * x[s] + q[s];
    return eval_mixture(xi, y) - eval_mixture(xi, q);
}

// Linear part of the shifted mixture: sum_s (1 - q(s)) d_s xi(q) x(s).
double linear_part(const Mixture& xi, const OverlapVector& q, std::span<const double> x) {
    const auto g = grad_mixture(xi, q);
    double acc = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) acc += (1.0 - q[s]) * g[s] * x[s];
    return acc;
}

double max_coefficient_gap(const Mixture& a, const Mixture& b) {
    double worst = 0.0;
    for (const auto& [p, c] : a.terms()) worst = std::max(worst, std::abs(c - b.coefficient(p)));
    for (const auto& [p, c] : b.terms()) worst = std::max(worst, std::abs(c - a.coefficient(p)));
    return worst;
}

double max_abs_coefficient(const Mixture& a) {
    double m = 0.0;
    for (const auto& [p, c] : a.terms()) m = std::max(m, std::abs(c));
    return m;
}

class Suite {
public:
    Suite(const ExperimentConfig& config, const VerifyHooks& hooks) : config_(config), hooks_(hooks) {}

    template <typename Fn>
    void run(const std::string& name, Fn&& fn) {
        Rng rng(derive_seed(config_.master_seed, "verify/" + name));
        try {
            outcomes_.push_back(fn(rng));
            outcomes_.back().name = name;
        } catch (const BudgetExceeded& e) {
            outcomes_.push_back({name, "skip", e.what()});
        } catch (const std::exception& e) {
            outcomes_.push_back({name, "fail", std::string("exception: ") + e.what()});
        }
    }

    Mixture hooked_xi_q(const Mixture& xi, const OverlapVector& q) const {
        return without_linear_terms(hooks_.shifted_coefficients(xi, q));
    }

    std::vector<CheckOutcome> take() { return std::move(outcomes_); }

private:
    const ExperimentConfig& config_;
    const VerifyHooks& hooks_;
    std::vector<CheckOutcome> outcomes_;
};

} // namespace

std::vector<CheckOutcome> run_property_suite(const ExperimentConfig& config, const VerifyHooks& hooks) {
    Suite suite(config, hooks);
    const Mixture& xi = config.model.mixture;
    const LayoutPtr& layout = config.model.layout;
    const std::size_t species = config.species();
    const std::size_t samples = config.verify.samples;
    const double tol = config.verify.tolerance;

    suite.run("mixture.shifted_identity", [&](Rng& rng) {
        Check c;
        for (std::size_t k = 0; k < samples; ++k) {
            const auto q = random_q(species, rng);
            const auto x = random_point(species, rng);
            c.close(eval_mixture(hooks.shifted_coefficients(xi, q), x), shifted_closed_form(xi, q, x), tol);
        }
        return c.outcome("", "xi~_q(x) against xi((1-q)x+q) - xi(q)");
    });

    suite.run("mixture.xi_q_identity", [&](Rng& rng) {
        Check c;
        for (std::size_t k = 0; k < samples; ++k) {
            const auto q = random_q(species, rng);
            const auto x = random_point(species, rng);
            const double expected = shifted_closed_form(xi, q, x) - linear_part(xi, q, x);
            c.close(eval_mixture(suite.hooked_xi_q(xi, q), x), expected, tol);
        }
        return c.outcome("", "xi_q(x) against xi~_q(x) minus its linear part");
    });

    suite.run("mixture.nesting", [&](Rng& rng) {
        Check c;
        for (std::size_t k = 0; k < samples; ++k) {
            const auto q = random_q(species, rng);
            const auto q_prime = random_q(species, rng);
            const Mixture twice = suite.hooked_xi_q(suite.hooked_xi_q(xi, q), q_prime);
            const Mixture once = suite.hooked_xi_q(xi, nesting_compose(q, q_prime));
            const double scale = std::max({1.0, max_abs_coefficient(twice), max_abs_coefficient(once)});
            c.close(max_coefficient_gap(twice, once) / scale, 0.0, tol);
        }
        return c.outcome("", "(xi_q)_q' against xi_q^ coefficientwise");
    });

    suite.run("mixture.onsager", [&](Rng& rng) {
        Check c;
        const std::vector<double> ones(species, 1.0);
        for (std::size_t k = 0; k < samples; ++k) {
            const auto q = random_q(species, rng);
            const double expected = 0.5 * (shifted_closed_form(xi, q, ones) - linear_part(xi, q, ones));
            c.close(onsager_term(xi, q), expected, tol);
        }
        return c.outcome("", "1/2 xi_q(1) against its closed form");
    });

    suite.run("mixture.log_volume_additivity", [&](Rng& rng) {
        Check c;
        for (std::size_t k = 0; k < samples; ++k) {
            const auto q = random_q(species, rng);
            const auto q_prime = random_q(species, rng);
            c.close(log_volume_term(*layout, q) + log_volume_term(*layout, q_prime),
                    log_volume_term(*layout, nesting_compose(q, q_prime)), tol);
        }
        return c.outcome("", "log-volume terms under nesting");
    });

    suite.run("mixture.beta_scaling", [&](Rng& rng) {
        Check c;
        std::uniform_real_distribution<double> u(0.0, 2.0);
        for (std::size_t k = 0; k < samples; ++k) {
            const double beta = u(rng);
            const auto x = random_point(species, rng);
            c.close(eval_mixture(scale_mixture(xi, beta), x), beta * beta * eval_mixture(xi, x), tol);
        }
        return c.outcome("", "scale_mixture against beta^2 xi");
    });

    suite.run("geometry.shell_sampling", [&](Rng& rng) {
        Check c;
        const std::size_t draws = std::min<std::size_t>(samples, 50);
        for (std::size_t k = 0; k < draws; ++k) {
            const auto q = random_q(species, rng);
            c.require(sample_on_shell(layout, q, rng).on_shell(q, 1e-9));
            c.require(sample_uniform(layout, rng).on_sphere(1e-9));
        }
        return c.outcome("", "samples on their shell and sphere");
    });

    suite.run("hamiltonian.zero_point", [&](Rng&) {
        Check c;
        const HamiltonianInstance h = build_instance(xi, layout, derive_seed(config.master_seed, "verify/instance"));
        c.close(h.energy(Configuration::zeros(layout)), 0.0, tol);
        return c.outcome("", "H(0)");
    });

    suite.run("hamiltonian.gradient", [&](Rng& rng) {
        Check c;
        const HamiltonianInstance h = build_instance(xi, layout, derive_seed(config.master_seed, "verify/instance"));
        const double step = 1e-5;
        for (int k = 0; k < 5; ++k) {
            const Configuration sigma = sample_uniform(layout, rng);
            const auto g = h.gradient(sigma);
            std::vector<double> x(sigma.coords().begin(), sigma.coords().end());
            double diff = 0.0, norm = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double keep = x[i];
                x[i] = keep + step;
                const double up = h.energy(x);
                x[i] = keep - step;
                const double down = h.energy(x);
                x[i] = keep;
                const double fd = (up - down) / (2.0 * step);
                diff += (fd - g[i]) * (fd - g[i]);
                norm += g[i] * g[i];
            }
            c.close(std::sqrt(diff) / std::max(1.0, std::sqrt(norm)), 0.0, 1e-6);
        }
        return c.outcome("", "gradient against central differences");
    });

    suite.run("ground_state.invariants", [&](Rng& rng) {
        Check c;
        const HamiltonianInstance h = build_instance(xi, layout, derive_seed(config.master_seed, "verify/instance"));
        AscentOptions options = config.ascent;
        options.restarts = std::min<std::size_t>(options.restarts, 4);
        options.workers = 1;
        const OverlapVector q = config.ground_state_q();
        const AscentResult r = ascend(h, q, options, rng);
        c.require(r.maximizer.on_shell(q, 1e-9));
        c.require(r.monotone);
        c.close(r.energy_per_spin, h.energy(r.maximizer) / static_cast<double>(layout->dimension()), 1e-10);
        return c.outcome("", "maximizer on shell, monotone ascent, energy per spin");
    });

    suite.run("thermo.beta_zero", [&](Rng& rng) {
        Check c;
        TapConfig t = config.tap_config();
        t.beta = 0.0;
        const HamiltonianInstance h = build_instance(xi, layout, derive_seed(config.master_seed, "verify/instance"));
        c.close(evaluate_free_energy(h, t, rng).value, 0.0, 1e-9);
        return c.outcome("", "free energy at beta = 0");
    });

    suite.run("tap.bookkeeping", [&](Rng&) -> CheckOutcome {
        if (species > 12) return {"", "skip", "more than 12 species for corner-scale enumeration"};
        Check c;
        const auto corners = share(SpeciesLayout::from_sizes(std::vector<std::size_t>(species, 1)));
        TapConfig t = config.tap_config();
        t.seeds = 2;
        t.workers = 1;
        t.beta = 1.0;
        t.fe_method = FeMethod::enumeration;
        t.gs_method = GsMethod::enumeration;
        const OverlapVector q = OverlapVector::constant(species, 0.3);
        const TapReport r = tap_evaluate(xi, corners, q, t);
        c.close(r.gap, r.lhs.mean - r.gs.mean - r.logvol - r.fq.mean, 1e-12);
        c.close(r.logvol, log_volume_term(*corners, q), 1e-12);
        c.close(r.onsager, onsager_term(xi, q), 1e-12);
        c.require(r.gap_mc_error == 0.0);
        return c.outcome("", "corner-scale TAP report reconstruction");
    });

    return suite.take();
}

CommandResult cmd_verify(const ExperimentConfig& config, const VerifyHooks& hooks) {
    const auto outcomes = run_property_suite(config, hooks);
    CsvTable table({"check", "status", "detail"});
    json checks = json::array();
    std::vector<std::vector<std::string>> rows;
    std::size_t failures = 0;
    for (const auto& o : outcomes) {
        table.row().cell(o.name).cell(o.status).cell(o.detail);
        checks.push_back({{"name", o.name}, {"status", o.status}, {"detail", o.detail}});
        rows.push_back({o.name, o.status, o.detail});
        failures += o.status == "fail" ? 1 : 0;
    }
    const std::filesystem::path dir(config.out_dir);
    write_csv(dir / "verify.csv", table);
    write_json(dir / "verify.json", {{"schema", "pspin.verify/1"},
                                     {"config", serialize_config(config, false)},
                                     {"passed", failures == 0},
                                     {"failures", failures},
                                     {"checks", checks}});
    CommandResult result;
    result.exit_code = failures == 0 ? 0 : 1;
    result.files = {"verify.csv", "verify.json"};
    result.summary = text_table({"check", "status", "detail"}, rows) +
                     (failures == 0 ? "all checks passed\n" : std::to_string(failures) + " check(s) failed\n");
    return result;
}

} // namespace pspin::runner
