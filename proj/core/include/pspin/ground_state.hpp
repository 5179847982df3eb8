#pragma once

#include "pspin/geometry.hpp"
#include "pspin/hamiltonian.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace pspin {

struct AscentOptions {
    std::size_t restarts = 32;
    std::size_t max_iters = 20000;
    /// Stop when the tangent gradient norm divided by N falls below this.
    double tolerance = 1e-8;
    std::size_t workers = 1;
    /// Armijo backtracking: step shrink factor and sufficient-increase slope.
    double shrink = 0.5;
    double slope = 1e-4;

    void validate() const;
};

struct RestartOutcome {
    double energy_per_spin = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Every accepted step increased the energy.
    bool monotone = true;
    /// Largest deviation of any block from its shell radius, relative.
    double max_shell_error = 0.0;
};

/// Best point found on S_N(q) by projected Riemannian gradient ascent.
struct AscentResult {
    Configuration maximizer;
    double energy_per_spin = 0.0;
    std::size_t restarts = 0;
    std::size_t best_restart = 0;
    double converged_fraction = 0.0;
    double mean_iterations = 0.0;
    std::size_t max_iterations = 0;
    bool monotone = true;
    std::vector<RestartOutcome> outcomes;
};

/// E_{*,N}(q) lower bound: each restart starts uniformly on S_N(q) and
/// follows Armijo steps along the per-species tangent gradient, re-projecting
/// every block to radius sqrt(N_s q(s)); blocks with q(s) = 0 stay at 0.
/// Restart seeds are drawn from rng up front, so the result does not depend
/// on the worker count. Ties go to the lowest restart index.
AscentResult ascend(const HamiltonianInstance& h, const OverlapVector& q, const AscentOptions& options, Rng& rng);

/// Exact E_{*,N}(q) for a single pure 2-spin term inside one species:
/// N_s q(s) lambda_max(w (J + J^T) / 2) / N over that block.
double eigen_oracle_2spin(const HamiltonianInstance& h, const OverlapVector& q);

/// Exact E_{*,N}(q) when every N_s = 1: the maximum of H over the 2^S
/// points with block values +-sqrt(q(s)).
double exact_gs_enumeration(const HamiltonianInstance& h, const OverlapVector& q);

/// Spread of a per-instance statistic across disorder seeds at each size.
struct ConcentrationRow {
    std::size_t dimension = 0;
    std::size_t seeds = 0;
    double mean = 0.0;
    double variance = 0.0;
    /// N times the sample variance.
    double scaled_variance = 0.0;
    std::vector<double> values;
};

/// Evaluates stat(layout, seed_index) for every layout and seed index in
/// parallel and reports the per-layout sample variance.
std::vector<ConcentrationRow> concentration_probe(const std::vector<LayoutPtr>& layouts, std::size_t seeds,
                                                  std::size_t workers,
                                                  const std::function<double(const LayoutPtr&, std::size_t)>& stat);

/// concentration_probe of the ascent estimate of E_{*,N}(q); instance i at
/// size N uses seeds derived from (master_seed, "gs/N<N>/instance/<i>").
std::vector<ConcentrationRow> gs_concentration_probe(const Mixture& xi, const std::vector<LayoutPtr>& layouts,
                                                     const OverlapVector& q, std::size_t seeds,
                                                     const AscentOptions& options, std::uint64_t master_seed);

} // namespace pspin
