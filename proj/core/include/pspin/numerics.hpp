#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace pspin {

/// log(sum exp(v)); -inf for an empty range.
double log_sum_exp(std::span<const double> v);

double mean(std::span<const double> v);
/// Unbiased sample variance (0 for fewer than two values).
double sample_variance(std::span<const double> v);
/// Standard error of the mean, sqrt(var / n).
double standard_error(std::span<const double> v);

/// Standard error of the mean of a correlated series by batch means.
/// Uses `batches` contiguous batches (at least 2 values each).
double batch_means_error(std::span<const double> series, std::size_t batches = 20);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval for a binomial proportion at z standard deviations.
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.96);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(std::size_t n);

/// Composite Simpson weights on an arbitrary ascending grid. Pairs of
/// intervals are integrated with the interpolating quadratic; an odd
/// trailing interval reuses the last three nodes. Two nodes give the
/// trapezoid rule.
std::vector<double> simpson_weights(std::span<const double> grid);
std::vector<double> trapezoid_weights(std::span<const double> grid);

/// log int_0^pi sin(theta)^k dtheta, for k > -1.
double log_sine_power_integral(double k);

} // namespace pspin
