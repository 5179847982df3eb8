#include "pspin/hamiltonian.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace pspin {

namespace {

constexpr std::size_t kNoPin = std::numeric_limits<std::size_t>::max();

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

std::size_t checked_power(std::size_t base, std::size_t exp, std::size_t cap) {
    std::size_t r = 1;
    for (std::size_t i = 0; i < exp; ++i) {
        if (base != 0 && r > cap / base) return cap + 1;
        r *= base;
    }
    return r;
}

std::vector<std::vector<std::size_t>> species_assignments(const MultiDegree& p) {
    std::vector<std::size_t> seq;
    for (std::size_t s = 0; s < p.size(); ++s) seq.insert(seq.end(), static_cast<std::size_t>(p[s]), s);
    std::vector<std::vector<std::size_t>> out;
    do out.push_back(seq);
    while (std::next_permutation(seq.begin(), seq.end()));
    return out;
}

std::vector<std::size_t> make_strides(std::size_t n, std::size_t order) {
    std::vector<std::size_t> strides(order, 1);
    for (std::size_t j = order; j-- > 1;) strides[j - 1] = strides[j] * n;
    return strides;
}

// Contracts one species assignment of a term with sigma, starting at
// `level` with flat offset `base`. The pinned level, if any, takes index
// `pin` with no sigma factor.
double contract(const TensorTerm& t, const SpeciesLayout& layout, const std::vector<std::size_t>& assignment, std::size_t level, std::size_t base,
                std::span<const double> sigma, std::size_t pinned_level, std::size_t pin) {
    const std::size_t s = assignment[level];
    const std::size_t lo = layout.offset(s), hi = lo + layout.size(s);
    const std::size_t stride = t.strides[level];
    const bool last = level + 1 == t.order;
    if (level == pinned_level) {
        const std::size_t idx = base + pin * stride;
        return last ? t.disorder[idx] : contract(t, layout, assignment, level + 1, idx, sigma, pinned_level, pin);
    }
    double acc = 0.0;
    if (last) {
        const double* row = t.disorder.data() + base;
        for (std::size_t i = lo; i < hi; ++i) acc += row[i] * sigma[i];
        return acc;
    }
    for (std::size_t i = lo; i < hi; ++i) {
        if (sigma[i] == 0.0) continue;
        acc += sigma[i] * contract(t, layout, assignment, level + 1, base + i * stride, sigma, pinned_level, pin);
    }
    return acc;
}

} // namespace

const char* to_string(Backend backend) { return backend == Backend::tensor ? "tensor" : "covariance"; }

Backend backend_from_string(std::string_view name) {
    if (name == "tensor") return Backend::tensor;
    if (name == "covariance") return Backend::covariance;
    throw std::invalid_argument("unknown backend '" + std::string(name) + "'");
}

double tuple_variance(const Mixture& xi, const SpeciesLayout& layout, const MultiDegree& p) {
    double v = xi.coefficient(p);
    int k = 0;
    for (std::size_t s = 0; s < p.size(); ++s) {
        v *= factorial(p[s]) * std::pow(static_cast<double>(layout.size(s)), -p[s]);
        k += p[s];
    }
    return v / factorial(k);
}

HamiltonianInstance::HamiltonianInstance(Mixture xi, LayoutPtr layout, std::uint64_t seed, Backend backend,
                                         std::size_t budget)
    : mixture_(std::move(xi)), layout_(std::move(layout)), seed_(seed), backend_(backend) {
    if (!layout_) throw std::invalid_argument("hamiltonian: null layout");
    if (mixture_.species() != layout_->species())
        throw std::invalid_argument("hamiltonian: mixture and layout disagree on species count");
    if (backend_ == Backend::covariance) return;

    const std::size_t n = layout_->dimension();
    std::size_t entries = 0;
    for (const auto& [p, c] : mixture_.terms()) {
        entries += checked_power(n, static_cast<std::size_t>(total_degree(p)), budget);
        if (entries > budget)
            throw BudgetExceeded("hamiltonian: disorder tensors need more than " + std::to_string(budget) + " entries");
    }

    auto tensors = std::make_shared<std::vector<TensorTerm>>();
    std::size_t index = 0;
    for (const auto& [p, c] : mixture_.terms()) {
        TensorTerm t;
        t.degree = p;
        t.order = static_cast<std::size_t>(total_degree(p));
        t.tuple_variance = tuple_variance(mixture_, *layout_, p);
        t.weight = std::sqrt(static_cast<double>(n)) * std::sqrt(t.tuple_variance);
        t.assignments = species_assignments(p);
        t.strides = make_strides(n, t.order);
        t.disorder.resize(checked_power(n, t.order, budget));
        Rng rng(derive_seed(seed_, index++));
        std::normal_distribution<double> gauss;
        for (double& j : t.disorder) j = gauss(rng);
        tensors->push_back(std::move(t));
    }
    tensors_ = std::move(tensors);
}

HamiltonianInstance build_instance(const Mixture& xi, LayoutPtr layout, std::uint64_t seed, Backend backend,
                                   std::size_t budget) {
    return HamiltonianInstance(xi, std::move(layout), seed, backend, budget);
}

void HamiltonianInstance::require_tensor(const char* what) const {
    if (backend_ != Backend::tensor)
        throw std::logic_error(std::string(what) + " needs the tensor backend; the covariance backend only realizes "
                               "values on point sets");
}

std::span<const TensorTerm> HamiltonianInstance::terms() const {
    if (!tensors_) return {};
    return *tensors_;
}

std::size_t HamiltonianInstance::disorder_entries() const {
    std::size_t total = 0;
    for (const auto& t : terms()) total += t.disorder.size();
    return total;
}

double HamiltonianInstance::term_energy(std::size_t index, std::span<const double> sigma) const {
    require_tensor("energy");
    const TensorTerm& t = terms()[index];
    double acc = 0.0;
    for (const auto& a : t.assignments) acc += contract(t, *layout_, a, 0, 0, sigma, kNoPin, 0);
    return t.weight * acc;
}

double HamiltonianInstance::energy(std::span<const double> sigma) const {
    require_tensor("energy");
    if (sigma.size() != dimension()) throw std::invalid_argument("energy: dimension mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < terms().size(); ++k) total += term_energy(k, sigma);
    for (std::size_t i = 0; i < field_.size(); ++i) total += field_[i] * sigma[i];
    return total;
}

std::vector<double> HamiltonianInstance::gradient(std::span<const double> sigma) const {
    require_tensor("gradient");
    if (sigma.size() != dimension()) throw std::invalid_argument("gradient: dimension mismatch");
    std::vector<double> g(dimension(), 0.0);
    for (const auto& t : terms()) {
        for (const auto& a : t.assignments) {
            for (std::size_t level = 0; level < t.order; ++level) {
                const std::size_t s = a[level];
                for (std::size_t m = layout_->offset(s); m < layout_->offset(s) + layout_->size(s); ++m)
                    g[m] += t.weight * contract(t, *layout_, a, 0, 0, sigma, level, m);
            }
        }
    }
    for (std::size_t i = 0; i < field_.size(); ++i) g[i] += field_[i];
    return g;
}

std::vector<double> HamiltonianInstance::realize(std::span<const Configuration> points) const {
    return realize_on_points(mixture_, *layout_, points, seed_);
}

HamiltonianInstance HamiltonianInstance::with_field(std::vector<double> field, Mixture law) const {
    if (field.size() != dimension()) throw std::invalid_argument("with_field: dimension mismatch");
    HamiltonianInstance out = *this;
    if (out.field_.empty()) out.field_.assign(dimension(), 0.0);
    for (std::size_t i = 0; i < field.size(); ++i) out.field_[i] += field[i];
    out.mixture_ = std::move(law);
    return out;
}

std::vector<double> realize_on_points(const Mixture& xi, const SpeciesLayout& layout,
                                      std::span<const Configuration> points, std::uint64_t seed) {
    // Exact duplicates share one Gaussian coordinate.
    std::vector<std::size_t> representative(points.size());
    std::vector<std::size_t> unique;
    for (std::size_t a = 0; a < points.size(); ++a) {
        if (points[a].dimension() != layout.dimension())
            throw std::invalid_argument("realize_on_points: point dimension mismatch");
        representative[a] = unique.size();
        for (std::size_t u = 0; u < unique.size(); ++u) {
            const auto x = points[unique[u]].coords(), y = points[a].coords();
            if (std::equal(x.begin(), x.end(), y.begin())) {
                representative[a] = u;
                break;
            }
        }
        if (representative[a] == unique.size()) unique.push_back(a);
    }

    const auto m = static_cast<Eigen::Index>(unique.size());
    const double n = static_cast<double>(layout.dimension());
    Eigen::MatrixXd cov(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b <= a; ++b) {
            const auto r = overlap(layout, points[unique[a]].coords(), points[unique[b]].coords());
            cov(a, b) = cov(b, a) = n * eval_mixture(xi, r);
        }

    std::vector<double> values(points.size(), 0.0);
    if (m == 0) return values;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw std::runtime_error("realize_on_points: eigensolver failed");
    const double tol = 1e-10 * std::abs(cov.trace());
    Eigen::VectorXd lambda = eig.eigenvalues();
    if (lambda.minCoeff() < -tol)
        throw NonPsdCovariance("realize_on_points: covariance eigenvalue " + std::to_string(lambda.minCoeff()) +
                               " below clip tolerance " + std::to_string(-tol));
    lambda = lambda.cwiseMax(0.0).cwiseSqrt();

    Rng rng(seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = gauss(rng);
    const Eigen::VectorXd draw = eig.eigenvectors() * lambda.cwiseProduct(z);
    for (std::size_t a = 0; a < points.size(); ++a) values[a] = draw(static_cast<Eigen::Index>(representative[a]));
    return values;
}

HamiltonianInstance attach_external_field(const HamiltonianInstance& hq, const Mixture& xi, const OverlapVector& q,
                                          std::uint64_t seed) {
    const Mixture expected = xi_q(xi, q);
    const auto& have = hq.mixture().terms();
    const bool matches = have.size() == expected.terms().size() &&
                         std::equal(have.begin(), have.end(), expected.terms().begin(), [](const auto& a, const auto& b) {
                             return a.first == b.first && std::abs(a.second - b.second) <= 1e-12 * std::abs(b.second);
                         });
    if (!matches) throw std::invalid_argument("attach_external_field: instance was not built from xi_q");

    const Mixture shifted = shifted_coefficients(xi, q);
    const auto& layout = hq.layout();
    const double n = static_cast<double>(layout.dimension());
    std::vector<double> field(layout.dimension(), 0.0);
    Rng rng(derive_seed(seed, "external-field"));
    std::normal_distribution<double> gauss;
    for (std::size_t s = 0; s < layout.species(); ++s) {
        MultiDegree unit(layout.species(), 0);
        unit[s] = 1;
        const double scale = std::sqrt(n / static_cast<double>(layout.size(s))) * std::sqrt(shifted.coefficient(unit));
        for (std::size_t i = layout.offset(s); i < layout.offset(s) + layout.size(s); ++i) field[i] = scale * gauss(rng);
    }
    if (hq.backend() == Backend::covariance)
        return HamiltonianInstance(shifted, hq.layout_ptr(), hq.seed(), Backend::covariance);
    return hq.with_field(std::move(field), shifted);
}

double lipschitz_ratio(const HamiltonianInstance& h, std::size_t pairs, Rng& rng) {
    if (pairs == 0) throw std::invalid_argument("lipschitz_ratio: need at least one pair");
    const auto& layout = h.layout();
    const double n = static_cast<double>(layout.dimension());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss;
    double best = 0.0;
    for (std::size_t k = 0; k < pairs; ++k) {
        const Configuration sigma = sample_in_ball(h.layout_ptr(), rng);
        Configuration pi = sample_in_ball(h.layout_ptr(), rng);
        if (k % 2 == 1) {
            // Local pair: a short step along the gradient, pulled back into the ball.
            const double scale = std::pow(10.0, -3.0 * unit(rng));
            std::vector<double> x(sigma.coords().begin(), sigma.coords().end());
            const auto g = h.gradient(sigma);
            double g_norm = 0.0;
            for (double v : g) g_norm += v * v;
            g_norm = std::sqrt(g_norm);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += g_norm > 0.0 ? scale * g[i] / g_norm : scale * gauss(rng);
            pi = Configuration(h.layout_ptr(), std::move(x));
            pi.modify([&](std::span<double> c) {
                for (std::size_t s = 0; s < layout.species(); ++s) {
                    const double cap = static_cast<double>(layout.size(s));
                    double norm_sq = 0.0;
                    for (std::size_t i = layout.offset(s); i < layout.offset(s) + layout.size(s); ++i) norm_sq += c[i] * c[i];
                    if (norm_sq <= cap) continue;
                    const double shrink = std::sqrt(cap / norm_sq);
                    for (std::size_t i = layout.offset(s); i < layout.offset(s) + layout.size(s); ++i) c[i] *= shrink;
                }
            });
        }
        std::vector<double> diff(sigma.dimension());
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = sigma[i] - pi[i];
        const auto r = overlap(layout, diff, diff);
        const double dist = std::sqrt(*std::max_element(r.begin(), r.end()));
        if (dist == 0.0) continue;
        best = std::max(best, std::abs(h.energy(sigma) - h.energy(pi)) / (n * dist));
    }
    return best;
}

} // namespace pspin
