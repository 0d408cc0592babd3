#include "twostep/theory.hpp"

#include <cmath>

#include "twostep/errors.hpp"
#include "twostep/stats_kernel.hpp"

namespace twostep::theory {
namespace {

void validate(const TheoryParams& p) {
  if (!std::isfinite(p.delta0) || !std::isfinite(p.d_at_zero)) {
    throw DomainError("theory: effects must be finite");
  }
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) throw DomainError("theory: sigma must be > 0");
  if (p.n == 0) throw DomainError("theory: n must be >= 1");
  if (!(p.alpha > 0.0 && p.alpha < 1.0)) throw DomainError("theory: alpha must lie in (0,1)");
}

}  // namespace

double average_effect(const TheoryParams& params, double pi0) {
  if (!(pi0 >= 0.0 && pi0 < 1.0)) throw DomainError("average_effect: pi0 must lie in [0,1)");
  return params.delta0 - pi0 * (params.delta0 - params.d_at_zero);
}

double noncentrality(const TheoryParams& params, double pi0) {
  validate(params);
  return std::sqrt(static_cast<double>(params.n)) * average_effect(params, pi0) / params.sigma;
}

double power_at_noncentrality(double lambda, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("power: alpha must lie in (0,1)");
  // z_{1-alpha/2} = -quantile(alpha/2), so lambda = 0 gives 2 * Phi(quantile(alpha/2)) = alpha.
  const double z = -normal_quantile(0.5 * alpha);
  return normal_cdf(lambda - z) + normal_cdf(-z - lambda);
}

double aksa_asymptotic_power(const TheoryParams& params, double pi0) {
  return power_at_noncentrality(noncentrality(params, pi0), params.alpha);
}

BrownMoments brown_moment_match(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("brown_moment_match: rho must lie in [0,1]");
  BrownMoments m;
  m.c = 1.0 + rho;
  m.nu = 4.0 / m.c;
  m.mean = 4.0;
  m.variance = 8.0 * (1.0 + rho);
  return m;
}

std::vector<PowerCurvePoint> power_curve(const TheoryParams& params, const std::vector<double>& pi0_grid) {
  std::vector<PowerCurvePoint> out;
  out.reserve(pi0_grid.size());
  for (double pi0 : pi0_grid) {
    PowerCurvePoint pt;
    pt.pi0 = pi0;
    pt.average_effect = average_effect(params, pi0);
    pt.lambda = noncentrality(params, pi0);
    pt.power = power_at_noncentrality(pt.lambda, params.alpha);
    out.push_back(pt);
  }
  return out;
}

}  // namespace twostep::theory
