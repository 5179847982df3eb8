#pragma once

#include "pspin/mixture.hpp"
#include "pspin/seeding.hpp"

#include <memory>
#include <span>
#include <vector>

namespace pspin {

using LayoutPtr = std::shared_ptr<const SpeciesLayout>;

inline LayoutPtr share(SpeciesLayout layout) { return std::make_shared<const SpeciesLayout>(std::move(layout)); }

/// A point of R^N split into species blocks, with cached per-block squared
/// norms. Value type; the layout is shared and immutable.
class Configuration {
public:
    Configuration(LayoutPtr layout, std::vector<double> coords);
    static Configuration zeros(LayoutPtr layout);

    const SpeciesLayout& layout() const noexcept { return *layout_; }
    const LayoutPtr& layout_ptr() const noexcept { return layout_; }
    std::size_t dimension() const noexcept { return coords_.size(); }

    std::span<const double> coords() const noexcept { return coords_; }
    std::span<const double> block(std::size_t s) const;
    double operator[](std::size_t i) const { return coords_[i]; }

    /// Cached sum_{i in I_s} x_i^2.
    double block_norm_sq(std::size_t s) const { return norms_.at(s); }

    /// Replaces the coordinates and refreshes the cached norms.
    void assign(std::vector<double> coords);

    /// Applies fn to the mutable coordinates, then refreshes the cached norms.
    template <typename Fn>
    void modify(Fn&& fn) {
        fn(std::span<double>(coords_));
        refresh_norms();
    }

    /// Every block has squared norm N_s to the given relative tolerance.
    bool on_sphere(double rel_tol = 1e-9) const;
    /// R(x, x) = q to the given relative tolerance (absolute where q(s) = 0).
    bool on_shell(const OverlapVector& q, double rel_tol = 1e-9) const;

private:
    void refresh_norms();

    LayoutPtr layout_;
    std::vector<double> coords_;
    std::vector<double> norms_;
};

/// Band parameters for B(m, delta) and B(m, n, delta, rho).
struct BandSpec {
    Configuration center;
    double delta = 0.0;
    std::size_t n = 1;
    double rho = 0.0;

    void validate() const;
};

/// R_s(a, b) = N_s^{-1} sum_{i in I_s} a_i b_i. Not clamped.
OverlapVector overlap(const Configuration& a, const Configuration& b);
OverlapVector overlap(const SpeciesLayout& layout, std::span<const double> a, std::span<const double> b);
double overlap_species(const SpeciesLayout& layout, std::size_t s, std::span<const double> a,
                       std::span<const double> b);
OverlapVector self_overlap(const Configuration& a);

/// Uniform point of S_N: Gaussian blocks rescaled to norm sqrt(N_s).
Configuration sample_uniform(const LayoutPtr& layout, Rng& rng);

/// Uniform point of S_N(q): block s uniform on the sphere of radius sqrt(N_s q(s)).
Configuration sample_on_shell(const LayoutPtr& layout, const OverlapVector& q, Rng& rng);

/// Uniform point of the closed ball (per-block uniform in the ball of radius sqrt(N_s)).
Configuration sample_in_ball(const LayoutPtr& layout, Rng& rng);

/// |R_s(sigma, m) - R_s(m, m)| <= delta for every species.
bool in_band(const Configuration& sigma, const Configuration& m, double delta);

/// Every replica in B(m, delta) and every distinct pair within rho of R(m, m).
bool in_multi_band(std::span<const Configuration> replicas, const BandSpec& spec);

/// sigma~_i = (sigma_i - m_i) / sqrt(1 - q(s)). Requires m in S_N(q) and
/// sigma in B(m, 0), both to 1e-8.
Configuration tilde_transform(const Configuration& sigma, const Configuration& m, const OverlapVector& q);
/// Inverse of tilde_transform: sigma_i = m_i + sqrt(1 - q(s)) sigma~_i.
Configuration untilde_transform(const Configuration& sigma_tilde, const Configuration& m, const OverlapVector& q);

/// The map sigma -> pi onto B(m, 0). Species with R_s(m, m) = 0 pass
/// through unchanged. Throws when the residual block vanishes.
Configuration project_phi(const Configuration& sigma, const Configuration& m);

/// The dilated centre m(t): block s scaled by 1 + t(s) / R_s(m, m).
Configuration dilate(const Configuration& m, const OverlapVector& t);

/// m* with blocks scaled by sqrt(q(s) / R_s(m', m')), so R(m*, m*) = q.
Configuration rescale_to_shell(const Configuration& m_prime, const OverlapVector& q);

/// log of the uniform measure of the band {|sqrt(q) u - q| <= delta} on
/// S(n_s), where u is the cosine to the centre direction. q in [0, 1].
double log_band_measure_species(std::size_t n_s, double q, double delta);

/// (1/N) log mu(B(m, delta)) for any m with R(m, m) = q, from the exact
/// per-species one-dimensional integrals. q in [0, 1]^S.
double log_band_volume(const SpeciesLayout& layout, const OverlapVector& q, double delta);

/// Exact uniform sample from B(m, delta): per species, the cosine to m is
/// drawn from its marginal restricted to the band and the orthogonal part
/// is uniform. Throws when the band is empty.
Configuration sample_in_band(const Configuration& m, double delta, Rng& rng);

} // namespace pspin
