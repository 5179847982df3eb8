#include "pspin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pspin {

double log_sum_exp(std::span<const double> v) {
    if (v.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - top);
    return top + std::log(acc);
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size() - 1);
}

double standard_error(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

double batch_means_error(std::span<const double> series, std::size_t batches) {
    batches = std::min(batches, series.size() / 2);
    if (batches < 2) return standard_error(series);
    const std::size_t len = series.size() / batches;
    std::vector<double> means;
    means.reserve(batches);
    for (std::size_t b = 0; b < batches; ++b) means.push_back(mean(series.subspan(b * len, len)));
    return standard_error(means);
}

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
    const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

QuadratureRule gauss_legendre(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
    if (n == 1) return {{0.0}, {2.0}};
    QuadratureRule rule{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = pk;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

namespace {

// int_a^b (x - u)(x - v) dx
double quad_moment(double u, double v, double a, double b) {
    auto prim = [&](double x) { return x * x * x / 3.0 - (u + v) * x * x / 2.0 + u * v * x; };
    return prim(b) - prim(a);
}

// Weights of the quadratic through (x0, x1, x2) integrated over [a, b].
void add_lagrange3(std::span<const double> g, std::size_t i0, double a, double b, std::vector<double>& w) {
    const double x0 = g[i0], x1 = g[i0 + 1], x2 = g[i0 + 2];
    w[i0] += quad_moment(x1, x2, a, b) / ((x0 - x1) * (x0 - x2));
    w[i0 + 1] += quad_moment(x0, x2, a, b) / ((x1 - x0) * (x1 - x2));
    w[i0 + 2] += quad_moment(x0, x1, a, b) / ((x2 - x0) * (x2 - x1));
}

void require_ascending(std::span<const double> grid) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("quadrature grid must be strictly ascending");
}

} // namespace

std::vector<double> trapezoid_weights(std::span<const double> grid) {
    require_ascending(grid);
    std::vector<double> w(grid.size(), 0.0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double h = grid[i] - grid[i - 1];
        w[i - 1] += h / 2;
        w[i] += h / 2;
    }
    return w;
}

std::vector<double> simpson_weights(std::span<const double> grid) {
    require_ascending(grid);
    if (grid.size() < 3) return trapezoid_weights(grid);
    std::vector<double> w(grid.size(), 0.0);
    const std::size_t intervals = grid.size() - 1;
    std::size_t i = 0;
    for (; i + 2 <= intervals; i += 2) add_lagrange3(grid, i, grid[i], grid[i + 2], w);
    if (i < intervals) add_lagrange3(grid, grid.size() - 3, grid[i], grid[i + 1], w);
    return w;
}

double log_sine_power_integral(double k) {
    // int_0^pi sin^k = sqrt(pi) Gamma((k+1)/2) / Gamma(k/2 + 1)
    return 0.5 * std::log(std::numbers::pi) + std::lgamma((k + 1.0) / 2.0) - std::lgamma(k / 2.0 + 1.0);
}

} // namespace pspin
