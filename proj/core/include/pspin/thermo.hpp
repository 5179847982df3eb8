#pragma once

#include "pspin/geometry.hpp"
#include "pspin/hamiltonian.hpp"
#include "pspin/numerics.hpp"
#include "pspin/sampler.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace pspin {

enum class Method { enumeration, quadrature, thermo_integration };

const char* to_string(Method method);

/// Per-spin free energy (1/N) log Z with its standard error.
struct FreeEnergyEstimate {
    double value = 0.0;
    double std_error = 0.0;
    Method method = Method::enumeration;
    std::vector<std::string> flags;
    nlohmann::json meta = nlohmann::json::object();

    bool flagged(std::string_view flag) const;
    void flag(std::string flag);
};

/// (1/N) log of the average of exp(H) over the 2^S sign patterns. Requires
/// every N_s = 1.
FreeEnergyEstimate exact_fe_enumeration(const HamiltonianInstance& h);

/// Tensor-product quadrature of the average of exp(H) over S_N, for
/// N_s <= 3 and sum_s (N_s - 1) <= 6. Circles use the periodic trapezoid
/// rule; 2-spheres use Gauss-Legendre in the height times the trapezoid
/// rule in azimuth. Nodes per angle double from `nodes_per_angle` until
/// successive values differ by at most `tolerance`.
FreeEnergyEstimate exact_fe_quadrature(const HamiltonianInstance& h, std::size_t nodes_per_angle = 16,
                                       double tolerance = 1e-10, std::size_t max_points = 50'000'000);

/// F_N(m, delta) by enumeration (every N_s = 1).
FreeEnergyEstimate exact_restricted_fe_enumeration(const HamiltonianInstance& h, const Configuration& m, double delta);

/// F_N(m, n, delta, rho) by enumerating n-tuples of sign patterns.
FreeEnergyEstimate exact_multi_replica_fe_enumeration(const HamiltonianInstance& h, const BandSpec& spec);

/// log G^{(x)n}{all pairs within rho of R(m, m) | every replica in B(m, delta)}
/// by enumeration, with G the Gibbs weight exp(H - H(m)).
double exact_pair_constraint_log_probability(const HamiltonianInstance& h, const BandSpec& spec);

/// Thinned Gibbs samples per beta from replica exchange on S_N.
struct GibbsSamples {
    std::vector<double> betas;
    std::vector<std::vector<Configuration>> samples;
    std::vector<ChainStats> chains;
    std::vector<double> swap_acceptance;
    bool poor_mixing = false;
};

GibbsSamples pt_sampler(const HamiltonianInstance& h, std::span<const double> betas, const SamplerConfig& config,
                        Rng& rng);

/// Simpson integral of a curve sampled on an ascending grid, with the
/// Monte Carlo error propagated through the weights and a grid term
/// |Simpson - trapezoid|. std_error is the sum of the two.
struct CurveIntegral {
    double value = 0.0;
    double mc_error = 0.0;
    double grid_error = 0.0;
};

CurveIntegral integrate_curve(std::span<const double> grid, std::span<const double> values,
                              std::span<const double> errors);

/// F at beta_max = (1/N) log int exp(beta_max H) dmu, as the integral over
/// the grid of (1/N) <H>_beta. The grid must start at 0.
FreeEnergyEstimate fe_thermo_integration(const HamiltonianInstance& h, std::span<const double> betas,
                                         const SamplerConfig& config, Rng& rng);

/// F_N(m, delta) at beta_max: the exact (1/N) log mu(B(m, delta)) plus the
/// integral of (1/N) <H - H(m)>_beta for the band-restricted chain.
FreeEnergyEstimate restricted_fe(const HamiltonianInstance& h, const Configuration& m, double delta,
                                 std::span<const double> betas, const SamplerConfig& config, Rng& rng);

/// F_N(m, n, delta, rho) at beta_max. The beta = 0 term is
/// (1/N) log mu(B(m, delta)) + (1/(Nn)) log P, with P the probability that
/// n independent uniform band points satisfy the pair constraint,
/// estimated from `pair_draws` exact band samples.
FreeEnergyEstimate multi_replica_fe(const HamiltonianInstance& h, const BandSpec& spec, std::span<const double> betas,
                                    const SamplerConfig& config, Rng& rng, std::size_t pair_draws = 20000);

struct MultisampEstimate {
    /// (1/N) log of the hit frequency (the floor when there are no hits).
    double value = 0.0;
    /// Wilson interval for the frequency, mapped through (1/N) log.
    double lower = 0.0;
    double upper = 0.0;
    std::size_t hits = 0;
    std::size_t trials = 0;
    std::vector<std::string> flags;
};

/// (1/N) log G^{(x)n}{|R_s(sigma^i, sigma^j) - q(s)| < eps for all i < j, s}
/// at beta_max. Replica i is the thinned top-beta output of its own
/// replica-exchange run; tuples pair the t-th samples of every run.
MultisampEstimate multisamplability_profile(const HamiltonianInstance& h, const OverlapVector& q, std::size_t n,
                                            double eps, std::span<const double> betas, const SamplerConfig& config,
                                            Rng& rng);

/// Evenly spaced grid of `nodes` points from 0 to beta_max.
std::vector<double> uniform_beta_grid(double beta_max, std::size_t nodes);

} // namespace pspin
