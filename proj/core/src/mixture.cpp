#include "pspin/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pspin {

namespace {

double int_pow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

void require_same_species(const Mixture& xi, std::size_t n) {
    if (xi.species() != n)
        throw std::invalid_argument("mixture has " + std::to_string(xi.species()) +
                                    " species but argument has " + std::to_string(n));
}

// Visits every p with 0 <= p(s) <= upper(s) for all s.
template <typename Fn>
void for_each_subdegree(const MultiDegree& upper, Fn&& fn) {
    MultiDegree p(upper.size(), 0);
    while (true) {
        fn(p);
        std::size_t s = 0;
        while (s < p.size() && p[s] == upper[s]) p[s++] = 0;
        if (s == p.size()) return;
        ++p[s];
    }
}

} // namespace

SpeciesLayout::SpeciesLayout(std::vector<std::string> labels, std::vector<std::size_t> sizes)
    : labels_(std::move(labels)), sizes_(std::move(sizes)) {
    if (labels_.size() != sizes_.size())
        throw std::invalid_argument("layout: labels and sizes differ in length");
    dimension_ = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
    proportions_.reserve(sizes_.size());
    for (auto n : sizes_)
        proportions_.push_back(dimension_ == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(dimension_));
    validate();
}

SpeciesLayout::SpeciesLayout(std::vector<std::string> labels, std::vector<std::size_t> sizes,
                             std::vector<double> proportions)
    : labels_(std::move(labels)), sizes_(std::move(sizes)), proportions_(std::move(proportions)) {
    if (labels_.size() != sizes_.size() || proportions_.size() != sizes_.size())
        throw std::invalid_argument("layout: labels, sizes and proportions differ in length");
    dimension_ = std::accumulate(sizes_.begin(), sizes_.end(), std::size_t{0});
    validate();
}

void SpeciesLayout::validate() {
    if (sizes_.empty()) throw std::invalid_argument("layout: at least one species required");
    for (std::size_t s = 0; s < sizes_.size(); ++s) {
        if (sizes_[s] == 0) throw std::invalid_argument("layout: species '" + labels_[s] + "' has size 0");
        // A single species has lambda = 1, so the upper end is closed.
        if (!(proportions_[s] > 0.0 && proportions_[s] <= 1.0))
            throw std::invalid_argument("layout: proportion of '" + labels_[s] + "' outside (0,1]");
        for (std::size_t t = 0; t < s; ++t)
            if (labels_[t] == labels_[s]) throw std::invalid_argument("layout: duplicate label '" + labels_[s] + "'");
    }
    const double total = std::accumulate(proportions_.begin(), proportions_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("layout: proportions do not sum to 1");
    offsets_.assign(sizes_.size(), 0);
    for (std::size_t s = 1; s < sizes_.size(); ++s) offsets_[s] = offsets_[s - 1] + sizes_[s - 1];
}

SpeciesLayout SpeciesLayout::single(std::size_t n) { return SpeciesLayout({"s"}, {n}); }

SpeciesLayout SpeciesLayout::from_sizes(std::vector<std::size_t> sizes) {
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < sizes.size(); ++s) labels.emplace_back(1, static_cast<char>('a' + s));
    return SpeciesLayout(std::move(labels), std::move(sizes));
}

std::size_t SpeciesLayout::species_of(std::size_t coordinate) const {
    if (coordinate >= dimension_) throw std::out_of_range("layout: coordinate out of range");
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), coordinate);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

void require_shell_parameter(const OverlapVector& q, std::size_t species) {
    if (q.size() != species)
        throw std::invalid_argument("overlap vector has " + std::to_string(q.size()) + " entries, expected " +
                                    std::to_string(species));
    for (double v : q)
        if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("shell parameter q(s) must lie in [0,1)");
}

int total_degree(const MultiDegree& p) { return std::accumulate(p.begin(), p.end(), 0); }

Mixture::Mixture(std::size_t species, Terms terms) : species_(species) {
    for (auto& [p, c] : terms) {
        if (p.size() != species_)
            throw std::invalid_argument("mixture: degree vector length does not match species count");
        if (std::any_of(p.begin(), p.end(), [](int d) { return d < 0; }))
            throw std::invalid_argument("mixture: negative degree");
        if (total_degree(p) < 1) throw std::invalid_argument("mixture: every term needs |p| >= 1");
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("mixture: coefficients must be finite and >= 0");
        if (c == 0.0) continue;
        terms_.emplace(p, c);
        max_total_degree_ = std::max(max_total_degree_, total_degree(p));
    }
}

double Mixture::coefficient(const MultiDegree& p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? 0.0 : it->second;
}

double eval_mixture(const Mixture& xi, std::span<const double> x) {
    require_same_species(xi, x.size());
    double total = 0.0;
    for (const auto& [p, c] : xi.terms()) {
        double term = c;
        for (std::size_t s = 0; s < p.size(); ++s) term *= int_pow(x[s], p[s]);
        total += term;
    }
    return total;
}

double eval_mixture_at(const Mixture& xi, double c) {
    std::vector<double> x(xi.species(), c);
    return eval_mixture(xi, x);
}

std::vector<double> grad_mixture(const Mixture& xi, std::span<const double> x) {
    require_same_species(xi, x.size());
    std::vector<double> g(x.size(), 0.0);
    for (const auto& [p, c] : xi.terms()) {
        for (std::size_t s = 0; s < p.size(); ++s) {
            if (p[s] == 0) continue;
            double term = c * p[s] * int_pow(x[s], p[s] - 1);
            for (std::size_t t = 0; t < p.size(); ++t)
                if (t != s) term *= int_pow(x[t], p[t]);
            g[s] += term;
        }
    }
    return g;
}

Mixture shifted_coefficients(const Mixture& xi, const OverlapVector& q) {
    require_shell_parameter(q, xi.species());
    Mixture::Terms out;
    for (const auto& [p_upper, c] : xi.terms()) {
        for_each_subdegree(p_upper, [&](const MultiDegree& p) {
            if (total_degree(p) < 1) return;
            double w = c;
            for (std::size_t s = 0; s < p.size(); ++s)
                w *= binomial(p_upper[s], p[s]) * int_pow(1.0 - q[s], p[s]) * int_pow(q[s], p_upper[s] - p[s]);
            out[p] += w;
        });
    }
    return Mixture(xi.species(), std::move(out));
}

Mixture xi_q(const Mixture& xi, const OverlapVector& q) {
    return without_linear_terms(shifted_coefficients(xi, q));
}

Mixture without_linear_terms(const Mixture& xi) {
    Mixture::Terms out;
    for (const auto& [p, c] : xi.terms())
        if (total_degree(p) >= 2) out.emplace(p, c);
    return Mixture(xi.species(), std::move(out));
}

bool has_linear_terms(const Mixture& xi) {
    return std::any_of(xi.terms().begin(), xi.terms().end(),
                       [](const auto& kv) { return total_degree(kv.first) == 1; });
}

OverlapVector nesting_compose(const OverlapVector& q, const OverlapVector& q_prime) {
    if (q.size() != q_prime.size()) throw std::invalid_argument("nesting_compose: size mismatch");
    require_shell_parameter(q, q.size());
    require_shell_parameter(q_prime, q.size());
    std::vector<double> out(q.size());
    for (std::size_t s = 0; s < q.size(); ++s) out[s] = q[s] + (1.0 - q[s]) * q_prime[s];
    return OverlapVector(std::move(out));
}

double onsager_term(const Mixture& xi, const OverlapVector& q) {
    return 0.5 * eval_mixture_at(xi_q(xi, q), 1.0);
}

double log_volume_term(const SpeciesLayout& layout, const OverlapVector& q) {
    require_shell_parameter(q, layout.species());
    double total = 0.0;
    for (std::size_t s = 0; s < q.size(); ++s) total += layout.proportion(s) * std::log1p(-q[s]);
    return 0.5 * total;
}

Mixture scale_mixture(const Mixture& xi, double beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("scale_mixture: beta must be >= 0");
    Mixture::Terms out;
    for (const auto& [p, c] : xi.terms()) out.emplace(p, c * beta * beta);
    return Mixture(xi.species(), std::move(out));
}

} // namespace pspin
