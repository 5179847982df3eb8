#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pspin {

/// Species labels with per-species block sizes N_s and proportions lambda_s.
///
/// Species blocks are contiguous in coordinate order: species 0 occupies
/// [0, N_0), species 1 occupies [N_0, N_0 + N_1), and so on.
class SpeciesLayout {
public:
    /// Proportions default to N_s / N.
    SpeciesLayout(std::vector<std::string> labels, std::vector<std::size_t> sizes);
    SpeciesLayout(std::vector<std::string> labels, std::vector<std::size_t> sizes,
                  std::vector<double> proportions);

    /// One species labelled "s" with n coordinates.
    static SpeciesLayout single(std::size_t n);
    /// Species labelled "a", "b", ... with the given sizes.
    static SpeciesLayout from_sizes(std::vector<std::size_t> sizes);

    std::size_t species() const noexcept { return sizes_.size(); }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size(std::size_t s) const { return sizes_.at(s); }
    std::size_t offset(std::size_t s) const { return offsets_.at(s); }
    double proportion(std::size_t s) const { return proportions_.at(s); }
    const std::string& label(std::size_t s) const { return labels_.at(s); }

    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
    const std::vector<double>& proportions() const noexcept { return proportions_; }

    std::size_t species_of(std::size_t coordinate) const;

    bool operator==(const SpeciesLayout&) const = default;

private:
    void validate();

    std::vector<std::string> labels_;
    std::vector<std::size_t> sizes_;
    std::vector<double> proportions_;
    std::vector<std::size_t> offsets_;
    std::size_t dimension_ = 0;
};

/// Per-species real vector q = (q(s)). Used both for shell parameters and
/// for measured overlaps; the range checks live in the operations.
class OverlapVector {
public:
    OverlapVector() = default;
    explicit OverlapVector(std::vector<double> values) : values_(std::move(values)) {}
    OverlapVector(std::initializer_list<double> values) : values_(values) {}

    static OverlapVector constant(std::size_t species, double value) {
        return OverlapVector(std::vector<double>(species, value));
    }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t s) const { return values_[s]; }
    double& operator[](std::size_t s) { return values_[s]; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    std::span<const double> values() const noexcept { return values_; }
    operator std::span<const double>() const noexcept { return values_; }

    bool operator==(const OverlapVector&) const = default;

private:
    std::vector<double> values_;
};

/// Throws std::invalid_argument unless every q(s) lies in [0, 1).
void require_shell_parameter(const OverlapVector& q, std::size_t species);

using MultiDegree = std::vector<int>;

int total_degree(const MultiDegree& p);

/// Finite mixture polynomial xi(x) = sum_p delta_sq(p) prod_s x(s)^p(s).
///
/// Coefficients are the variances Delta_p^2. Keys are ordered
/// lexicographically in species order. Exact zeros are pruned on
/// construction; every key has |p| >= 1. Immutable once built.
class Mixture {
public:
    using Terms = std::map<MultiDegree, double>;

    explicit Mixture(std::size_t species) : species_(species) {}
    Mixture(std::size_t species, Terms terms);

    std::size_t species() const noexcept { return species_; }
    const Terms& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }
    /// Largest |p| retained (0 for the empty mixture).
    int max_total_degree() const noexcept { return max_total_degree_; }
    /// Delta_p^2, or 0 when p is absent.
    double coefficient(const MultiDegree& p) const;

    bool operator==(const Mixture&) const = default;

private:
    std::size_t species_ = 0;
    Terms terms_;
    int max_total_degree_ = 0;
};

double eval_mixture(const Mixture& xi, std::span<const double> x);
/// xi evaluated at the constant vector x(s) = c.
double eval_mixture_at(const Mixture& xi, double c);

std::vector<double> grad_mixture(const Mixture& xi, std::span<const double> x);

/// The mixture xi~_q(x) = xi((1-q)x+q) - xi(q), i.e. coefficients Delta_{q,p}^2.
Mixture shifted_coefficients(const Mixture& xi, const OverlapVector& q);

/// xi_q: shifted_coefficients with every |p| = 1 term removed.
Mixture xi_q(const Mixture& xi, const OverlapVector& q);

/// q^(s) = q(s) + (1 - q(s)) q'(s).
OverlapVector nesting_compose(const OverlapVector& q, const OverlapVector& q_prime);

/// 1/2 xi_q(1).
double onsager_term(const Mixture& xi, const OverlapVector& q);

/// 1/2 sum_s lambda_s log(1 - q(s)).
double log_volume_term(const SpeciesLayout& layout, const OverlapVector& q);

/// Multiplies every coefficient by beta^2, so that H scales linearly in beta.
Mixture scale_mixture(const Mixture& xi, double beta);

/// Mixture with the |p| = 1 terms dropped.
Mixture without_linear_terms(const Mixture& xi);

bool has_linear_terms(const Mixture& xi);

} // namespace pspin
