#pragma once

#include "pspin/ground_state.hpp"
#include "pspin/thermo.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pspin {

enum class FeMethod { automatic, enumeration, quadrature, thermo_integration };
enum class GsMethod { automatic, enumeration, ascent };

const char* to_string(FeMethod method);
const char* to_string(GsMethod method);
FeMethod fe_method_from_string(std::string_view name);
GsMethod gs_method_from_string(std::string_view name);

/// Text key of q used in task paths ("%.17g" values joined by commas), so a
/// given q draws the same seeds in a single evaluation and inside any scan.
std::string q_key(const OverlapVector& q);

/// Estimator settings shared by the TAP pipelines.
struct TapConfig {
    std::size_t seeds = 20;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    /// Inverse temperature of every free energy (1 keeps eq. F literal).
    double beta = 1.0;
    std::size_t beta_nodes = 21;
    SamplerConfig sampler;
    AscentOptions ascent;
    FeMethod fe_method = FeMethod::automatic;
    GsMethod gs_method = GsMethod::automatic;
    std::size_t quadrature_nodes = 16;
    /// Allowance per spin for local-search ground states in equality checks.
    double gs_bias_allowance = 0.02;

    void validate() const;
};

/// Free energy of one instance at config.beta. Automatic selection:
/// enumeration when every N_s = 1, quadrature when every N_s <= 3 and
/// sum_s (N_s - 1) <= 3, thermodynamic integration otherwise.
FreeEnergyEstimate evaluate_free_energy(const HamiltonianInstance& h, const TapConfig& config, Rng& rng);

/// E_{*,N}(q) of one instance: exhaustive when every N_s = 1 (automatic),
/// multi-restart ascent otherwise.
double evaluate_ground_state(const HamiltonianInstance& h, const OverlapVector& q, const TapConfig& config, Rng& rng);

/// Mean over disorder seeds of a per-instance estimate.
struct SeedAverage {
    double mean = 0.0;
    /// Standard error of the mean across seeds (includes Monte Carlo noise).
    double std_error = 0.0;
    /// sqrt(sum of squared per-seed Monte Carlo errors) / seeds.
    double mc_error = 0.0;
    std::vector<double> values;
    std::string method;
    std::vector<std::string> flags;
};

SeedAverage average_over_seeds(std::vector<double> values, std::vector<double> mc_errors, std::string method,
                               std::vector<std::string> flags);

/// The four terms of the TAP representation at q, averaged over seeds.
///
/// Seed i uses the instance derive_seed(master, "instance/<i>") of xi for
/// lhs and gs, and the independent instance derive_seed(master, "fq/<i>")
/// of xi_q for fq.
struct TapReport {
    OverlapVector q;
    SeedAverage lhs; // E F_N
    SeedAverage gs;  // E E_{*,N}(q)
    SeedAverage fq;  // E F_N(q)
    double logvol = 0.0;
    /// lhs - (gs + logvol + fq).
    double gap = 0.0;
    /// Standard error of the mean of the per-seed gaps.
    double gap_se = 0.0;
    /// Monte Carlo part of the gap error.
    double gap_mc_error = 0.0;
    /// 1/2 xi_q(1).
    double onsager = 0.0;
    std::vector<std::string> flags;
    std::size_t seeds = 0;

    /// gap >= -(3 gap_se + allowance).
    bool inequality_holds(double allowance = 0.0) const;
};

TapReport tap_evaluate(const Mixture& xi, const LayoutPtr& layout, const OverlapVector& q, const TapConfig& config);

/// tap_evaluate over a grid of q, computing lhs once per seed.
std::vector<TapReport> tap_inequality_scan(const Mixture& xi, const LayoutPtr& layout,
                                           const std::vector<OverlapVector>& q_grid, const TapConfig& config);

/// Index of the report with the smallest |gap|.
std::size_t argmin_abs_gap(const std::vector<TapReport>& reports);

struct OnsagerReport {
    OverlapVector q;
    SeedAverage fq;
    double onsager = 0.0;
    /// fq.mean - onsager.
    double difference = 0.0;
    double std_error = 0.0;
    bool within_3se = false;
};

OnsagerReport onsager_check(const Mixture& xi, const LayoutPtr& layout, const OverlapVector& q_star,
                            const TapConfig& config);

struct SymmetryReport {
    double tau = 0.0;
    /// Per species frequency of |R_s(sigma, sigma')| >= tau over replica pairs.
    std::vector<double> frequency;
    std::size_t pairs = 0;
    std::vector<std::string> flags;
};

/// Frequency of |R_s| >= tau over all pairs of n independent top-beta
/// replica-exchange runs on hq. Zero without sampling when tau > 1 + 1e-9.
SymmetryReport replica_symmetry_diagnostic(const HamiltonianInstance& hq, std::size_t n, double tau,
                                           std::span<const double> betas, const SamplerConfig& config, Rng& rng);

struct NestingReport {
    OverlapVector q, q_prime, q_hat;
    /// |logvol(q) + logvol(q') - logvol(q_hat)|.
    double logvol_error = 0.0;
    /// Largest coefficient difference between (xi_q)_{q'} and xi_{q_hat}.
    double mixture_error = 0.0;
    /// E E_*(q) + E E^q_*(q'), and E E_*(q_hat), over seeds.
    SeedAverage gs_sum;
    SeedAverage gs_hat;
    /// gs_hat - gs_sum; nonnegative up to error when the inequality holds.
    double gs_margin = 0.0;
    double gs_margin_se = 0.0;
    bool gs_inequality_holds = false;
};

NestingReport nesting_experiment(const Mixture& xi, const LayoutPtr& layout, const OverlapVector& q,
                                 const OverlapVector& q_prime, const TapConfig& config);

} // namespace pspin
