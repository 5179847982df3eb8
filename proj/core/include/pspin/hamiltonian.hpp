#pragma once

#include "pspin/geometry.hpp"
#include "pspin/mixture.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace pspin {

enum class Backend { tensor, covariance };

const char* to_string(Backend backend);
Backend backend_from_string(std::string_view name);

/// Thrown when the dense disorder tensors would exceed the entry budget.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a covariance matrix has an eigenvalue below -1e-10 * trace.
class NonPsdCovariance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense disorder for one mixture term p of order k = |p|.
///
/// `disorder` holds N^k i.i.d. standard normals indexed row-major by
/// (i_1, ..., i_k); only tuples whose species pattern is p contribute.
/// Each pattern-p tuple carries the same weight sqrt(N) * Delta_{i_1..i_k}.
struct TensorTerm {
    MultiDegree degree;
    std::size_t order = 0;
    double tuple_variance = 0.0; // Delta_{i_1..i_k}^2
    double weight = 0.0;         // sqrt(N) * Delta_{i_1..i_k}
    std::vector<double> disorder;
    std::vector<std::size_t> strides;
    std::vector<std::vector<std::size_t>> assignments; // species sequences with counts p
};

/// A realized Gaussian process H_N with covariance N xi(R).
///
/// The tensor backend stores the disorder explicitly and evaluates H and
/// its gradient anywhere. The covariance backend stores nothing beyond
/// (mixture, layout, seed) and only realizes joint values on point sets.
/// Instances are immutable; copies share the disorder.
class HamiltonianInstance {
public:
    static constexpr std::size_t kDefaultBudget = std::size_t{1} << 28;

    HamiltonianInstance(Mixture xi, LayoutPtr layout, std::uint64_t seed, Backend backend,
                        std::size_t budget = kDefaultBudget);

    const Mixture& mixture() const noexcept { return mixture_; }
    const SpeciesLayout& layout() const noexcept { return *layout_; }
    const LayoutPtr& layout_ptr() const noexcept { return layout_; }
    std::uint64_t seed() const noexcept { return seed_; }
    Backend backend() const noexcept { return backend_; }
    std::size_t dimension() const noexcept { return layout_->dimension(); }

    /// Disorder terms (tensor backend), in lexicographic degree order.
    std::span<const TensorTerm> terms() const;
    /// Linear external field added to H (empty when absent).
    std::span<const double> field() const noexcept { return field_; }
    /// Total number of stored disorder entries.
    std::size_t disorder_entries() const;

    double energy(std::span<const double> sigma) const;
    double energy(const Configuration& sigma) const { return energy(sigma.coords()); }
    /// Contribution of terms()[index] alone.
    double term_energy(std::size_t index, std::span<const double> sigma) const;

    std::vector<double> gradient(std::span<const double> sigma) const;
    std::vector<double> gradient(const Configuration& sigma) const { return gradient(sigma.coords()); }

    /// Jointly Gaussian values on the given points; see realize_on_points.
    std::vector<double> realize(std::span<const Configuration> points) const;

    /// Copy with an additional linear field and a relabelled mixture.
    HamiltonianInstance with_field(std::vector<double> field, Mixture law) const;

private:
    void require_tensor(const char* what) const;

    Mixture mixture_;
    LayoutPtr layout_;
    std::uint64_t seed_ = 0;
    Backend backend_ = Backend::tensor;
    std::shared_ptr<const std::vector<TensorTerm>> tensors_;
    std::vector<double> field_;
};

HamiltonianInstance build_instance(const Mixture& xi, LayoutPtr layout, std::uint64_t seed,
                                   Backend backend = Backend::tensor,
                                   std::size_t budget = HamiltonianInstance::kDefaultBudget);

/// Delta_{i_1..i_k}^2 for tuples of species pattern p.
double tuple_variance(const Mixture& xi, const SpeciesLayout& layout, const MultiDegree& p);

/// Draws (H(x_1), ..., H(x_M)) with covariance N xi(R(x_a, x_b)) by a
/// symmetric eigen-factorization, clipping eigenvalues down to
/// -1e-10 * trace. Exactly repeated points receive identical values.
std::vector<double> realize_on_points(const Mixture& xi, const SpeciesLayout& layout,
                                      std::span<const Configuration> points, std::uint64_t seed);

/// Adds the independent one-spin field sum_s sqrt(N/N_s) Delta_{q,p_s}
/// sum_{i in I_s} J_i sigma_i to an instance of xi_q, giving a process with
/// covariance N xi~_q(R).
HamiltonianInstance attach_external_field(const HamiltonianInstance& hq, const Mixture& xi, const OverlapVector& q,
                                          std::uint64_t seed);

/// max over sampled distinct pairs (sigma, pi) of the closed ball of
/// (alternating independent pairs and short steps along the gradient)
/// |H(sigma) - H(pi)| / (N max_s sqrt(R_s(sigma - pi, sigma - pi))).
double lipschitz_ratio(const HamiltonianInstance& h, std::size_t pairs, Rng& rng);

} // namespace pspin
