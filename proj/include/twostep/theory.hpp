#pragma once

// Closed-form companions to the simulations: diluted average effect under
// zero inflation, the asymptotic two-sided power of AKSA, and Brown's
// moment-matching constants.

#include <cstddef>
#include <vector>

namespace twostep::theory {

struct TheoryParams {
  double delta0 = 0.0;     // average effect without zero inflation
  double d_at_zero = 0.0;  // effect at the spike, D(0)
  double sigma = 1.0;      // first-order SD of the effect estimator, > 0
  std::size_t n = 1;       // sample size
  double alpha = 0.05;     // two-sided level in (0,1)
};

/// Delta(pi0) = delta0 - pi0 * (delta0 - D(0)); pi0 in [0,1).
double average_effect(const TheoryParams& params, double pi0);

/// sqrt(N) * Delta(pi0) / sigma.
double noncentrality(const TheoryParams& params, double pi0);

/// 1 - Phi(z - lambda) + Phi(-z - lambda) with z = z_{1-alpha/2}.
double power_at_noncentrality(double lambda, double alpha);

double aksa_asymptotic_power(const TheoryParams& params, double pi0);

struct BrownMoments {
  double c = 1.0;
  double nu = 4.0;
  double mean = 4.0;      // E[S_Fisher]
  double variance = 8.0;  // Var[S_Fisher] = 8 (1 + rho)
};

/// rho in [0,1]; satisfies c * nu = mean and 2 c^2 nu = variance.
BrownMoments brown_moment_match(double rho);

struct PowerCurvePoint {
  double pi0 = 0.0;
  double average_effect = 0.0;
  double lambda = 0.0;
  double power = 0.0;
};

std::vector<PowerCurvePoint> power_curve(const TheoryParams& params, const std::vector<double>& pi0_grid);

}  // namespace twostep::theory
