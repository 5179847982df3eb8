#include "pspin/ground_state.hpp"

#include "pspin/numerics.hpp"
#include "pspin/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pspin {

namespace {

constexpr std::size_t kMaxBacktracks = 60;

struct Shell {
    const SpeciesLayout* layout;
    std::vector<double> radius_sq; // N_s q(s)

    Shell(const SpeciesLayout& l, const OverlapVector& q) : layout(&l) {
        for (std::size_t s = 0; s < l.species(); ++s) radius_sq.push_back(static_cast<double>(l.size(s)) * q[s]);
    }

    // Removes the radial component of g per block; zero on blocks with q(s) = 0.
    double project_tangent(std::span<double> g, std::span<const double> x) const {
        double norm_sq = 0.0;
        for (std::size_t s = 0; s < layout->species(); ++s) {
            const std::size_t lo = layout->offset(s), n_s = layout->size(s);
            if (radius_sq[s] == 0.0) {
                for (std::size_t i = lo; i < lo + n_s; ++i) g[i] = 0.0;
                continue;
            }
            double radial = 0.0;
            for (std::size_t i = lo; i < lo + n_s; ++i) radial += g[i] * x[i];
            radial /= radius_sq[s];
            for (std::size_t i = lo; i < lo + n_s; ++i) {
                g[i] -= radial * x[i];
                norm_sq += g[i] * g[i];
            }
        }
        return norm_sq;
    }

    // Rescales every block with q(s) > 0 to its shell radius; returns the
    // largest relative squared-norm error after rescaling.
    double retract(std::span<double> y) const {
        double worst = 0.0;
        for (std::size_t s = 0; s < layout->species(); ++s) {
            const std::size_t lo = layout->offset(s), n_s = layout->size(s);
            if (radius_sq[s] == 0.0) continue;
            double norm_sq = 0.0;
            for (std::size_t i = lo; i < lo + n_s; ++i) norm_sq += y[i] * y[i];
            const double scale = std::sqrt(radius_sq[s] / norm_sq);
            double after = 0.0;
            for (std::size_t i = lo; i < lo + n_s; ++i) {
                y[i] *= scale;
                after += y[i] * y[i];
            }
            worst = std::max(worst, std::abs(after / radius_sq[s] - 1.0));
        }
        return worst;
    }
};

struct RestartRun {
    RestartOutcome outcome;
    std::vector<double> point;
};

RestartRun run_restart(const HamiltonianInstance& h, const OverlapVector& q, const AscentOptions& opt,
                       std::uint64_t seed) {
    const auto& layout = h.layout();
    const double n = static_cast<double>(layout.dimension());
    const Shell shell(layout, q);
    Rng rng(seed);
    const Configuration start = sample_on_shell(h.layout_ptr(), q, rng);

    RestartRun run;
    run.point.assign(start.coords().begin(), start.coords().end());
    std::vector<double> trial(run.point.size());
    double energy = h.energy(run.point);
    const double initial_step = 1.0 / std::sqrt(n);

    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        std::vector<double> g = h.gradient(run.point);
        const double norm_sq = shell.project_tangent(g, run.point);
        if (std::sqrt(norm_sq) / n < opt.tolerance) {
            run.outcome.converged = true;
            break;
        }
        bool accepted = false;
        double step = initial_step;
        for (std::size_t b = 0; b < kMaxBacktracks; ++b, step *= opt.shrink) {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = run.point[i] + step * g[i];
            const double shell_error = shell.retract(trial);
            const double e = h.energy(trial);
            if (e >= energy + opt.slope * step * norm_sq) {
                if (e < energy) run.outcome.monotone = false;
                run.outcome.max_shell_error = std::max(run.outcome.max_shell_error, shell_error);
                run.point.swap(trial);
                energy = e;
                accepted = true;
                break;
            }
        }
        ++run.outcome.iterations;
        if (!accepted) break; // no increase resolvable in floating point
    }
    run.outcome.energy_per_spin = energy / n;
    return run;
}

void require_q(const HamiltonianInstance& h, const OverlapVector& q, const char* what) {
    if (q.size() != h.layout().species()) throw std::invalid_argument(std::string(what) + ": species mismatch");
    for (double v : q)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(what) + ": q(s) outside [0,1]");
}

} // namespace

void AscentOptions::validate() const {
    if (restarts == 0) throw std::invalid_argument("ascend: need at least one restart");
    if (!(tolerance > 0.0)) throw std::invalid_argument("ascend: tolerance must be > 0");
    if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("ascend: shrink must lie in (0, 1)");
    if (!(slope > 0.0 && slope < 1.0)) throw std::invalid_argument("ascend: slope must lie in (0, 1)");
}

AscentResult ascend(const HamiltonianInstance& h, const OverlapVector& q, const AscentOptions& options, Rng& rng) {
    options.validate();
    require_q(h, q, "ascend");
    if (h.backend() != Backend::tensor) throw std::invalid_argument("ascend: needs the tensor backend");

    std::vector<std::uint64_t> seeds(options.restarts);
    for (auto& s : seeds) s = rng();
    std::vector<RestartRun> runs(options.restarts);
    parallel_for(options.restarts, options.workers,
                 [&](std::size_t r) { runs[r] = run_restart(h, q, options, seeds[r]); });

    std::size_t best = 0, converged = 0, total_iters = 0, max_iters = 0;
    bool monotone = true;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        const auto& o = runs[r].outcome;
        if (o.energy_per_spin > runs[best].outcome.energy_per_spin) best = r;
        converged += o.converged ? 1 : 0;
        total_iters += o.iterations;
        max_iters = std::max(max_iters, o.iterations);
        monotone = monotone && o.monotone;
    }

    std::vector<RestartOutcome> outcomes;
    for (const auto& r : runs) outcomes.push_back(r.outcome);
    const double count = static_cast<double>(runs.size());
    return AscentResult{Configuration(h.layout_ptr(), runs[best].point),
                        runs[best].outcome.energy_per_spin,
                        options.restarts,
                        best,
                        static_cast<double>(converged) / count,
                        static_cast<double>(total_iters) / count,
                        max_iters,
                        monotone,
                        std::move(outcomes)};
}

double eigen_oracle_2spin(const HamiltonianInstance& h, const OverlapVector& q) {
    require_q(h, q, "eigen_oracle_2spin");
    const auto terms = h.terms();
    if (terms.size() != 1 || terms[0].order != 2 || !h.field().empty())
        throw std::invalid_argument("eigen_oracle_2spin: need exactly one 2-spin term and no field");
    const auto& degree = terms[0].degree;
    std::size_t s = degree.size();
    for (std::size_t k = 0; k < degree.size(); ++k)
        if (degree[k] == 2) s = k;
    if (s == degree.size()) throw std::invalid_argument("eigen_oracle_2spin: the term must live inside one species");

    const auto& layout = h.layout();
    const std::size_t n = layout.dimension(), lo = layout.offset(s), n_s = layout.size(s);
    Eigen::MatrixXd a(n_s, n_s);
    for (std::size_t i = 0; i < n_s; ++i)
        for (std::size_t j = 0; j < n_s; ++j)
            a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                0.5 * terms[0].weight *
                (terms[0].disorder[(lo + i) * n + lo + j] + terms[0].disorder[(lo + j) * n + lo + i]);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    const double top = solver.eigenvalues()(static_cast<Eigen::Index>(n_s) - 1);
    return static_cast<double>(n_s) * q[s] * top / static_cast<double>(n);
}

double exact_gs_enumeration(const HamiltonianInstance& h, const OverlapVector& q) {
    require_q(h, q, "exact_gs_enumeration");
    const auto& layout = h.layout();
    const std::size_t species = layout.species();
    for (std::size_t s = 0; s < species; ++s)
        if (layout.size(s) != 1) throw std::invalid_argument("exact_gs_enumeration: every species must have N_s = 1");
    if (species > 20) throw std::invalid_argument("exact_gs_enumeration: too many species to enumerate");

    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> x(species);
    for (std::size_t mask = 0; mask < (std::size_t{1} << species); ++mask) {
        for (std::size_t s = 0; s < species; ++s) x[s] = ((mask >> s) & 1 ? -1.0 : 1.0) * std::sqrt(q[s]);
        best = std::max(best, h.energy(x));
    }
    return best / static_cast<double>(species);
}

std::vector<ConcentrationRow> concentration_probe(const std::vector<LayoutPtr>& layouts, std::size_t seeds,
                                                  std::size_t workers,
                                                  const std::function<double(const LayoutPtr&, std::size_t)>& stat) {
    if (seeds < 2) throw std::invalid_argument("concentration_probe: need at least two seeds");
    std::vector<double> values(layouts.size() * seeds);
    parallel_for(values.size(), workers, [&](std::size_t t) { values[t] = stat(layouts[t / seeds], t % seeds); });

    std::vector<ConcentrationRow> rows;
    for (std::size_t k = 0; k < layouts.size(); ++k) {
        ConcentrationRow row;
        row.dimension = layouts[k]->dimension();
        row.seeds = seeds;
        row.values.assign(values.begin() + static_cast<std::ptrdiff_t>(k * seeds),
                          values.begin() + static_cast<std::ptrdiff_t>((k + 1) * seeds));
        row.mean = mean(row.values);
        row.variance = sample_variance(row.values);
        row.scaled_variance = static_cast<double>(row.dimension) * row.variance;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<ConcentrationRow> gs_concentration_probe(const Mixture& xi, const std::vector<LayoutPtr>& layouts,
                                                     const OverlapVector& q, std::size_t seeds,
                                                     const AscentOptions& options, std::uint64_t master_seed) {
    AscentOptions inner = options;
    inner.workers = 1;
    return concentration_probe(layouts, seeds, options.workers, [&](const LayoutPtr& layout, std::size_t i) {
        const std::string path = "gs/N" + std::to_string(layout->dimension()) + "/instance/" + std::to_string(i);
        const HamiltonianInstance h = build_instance(xi, layout, derive_seed(master_seed, path));
        Rng rng(derive_seed(master_seed, path + "/ascent"));
        return ascend(h, q, inner, rng).energy_per_spin;
    });
}

} // namespace pspin
