#pragma once

// Deterministic numerical primitives shared by every test in the library.
// All functions are pure and safe to call concurrently.

#include <cstddef>
#include <span>
#include <vector>

namespace twostep {

/// Two-sample Kolmogorov-Smirnov distance sup_y |F_a(y) - F_b(y)| between
/// right-continuous empirical CDFs. Returns 0 when either sample is empty.
/// Throws InvalidInput on non-finite values.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sample KS test of `values` against U(0,1), asymptotic Kolmogorov
/// p-value with Stephens' small-sample correction. Used as a distributional
/// self-check by the simulation code and its tests.
KsResult ks_uniform_test(std::span<const double> values);

/// Pr{chi^2_nu >= s} for real nu > 0 (regularized upper incomplete gamma
/// Q(nu/2, s/2)). Throws DomainError for s < 0 or nu <= 0.
double chi_square_sf(double s, double nu);

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse of normal_cdf on the open interval (0,1); DomainError otherwise.
double normal_quantile(double p);

/// Midranks (average ranks for ties), 1-based.
std::vector<double> midranks(std::span<const double> values);

/// Spearman rank correlation with midranks for ties.
/// InvalidInput on length mismatch or length < 2; UndefinedCorrelation when
/// either side has zero rank variance.
double spearman_rho(std::span<const double> u, std::span<const double> v);

/// Sample Pearson correlation. Same error contract as spearman_rho.
double pearson_r(std::span<const double> u, std::span<const double> v);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_ci(std::size_t successes, std::size_t trials, double level = 0.95);

/// Linear-interpolation quantile (type 7) of an unsorted sample; q in [0,1].
double quantile(std::vector<double> values, double q);

}  // namespace twostep
