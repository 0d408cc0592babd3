#include "twostep/stats_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "twostep/errors.hpp"

namespace twostep {
namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw InvalidInput(std::string(what) + ": non-finite value");
    }
  }
}

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require_finite(a, "ks_two_sample");
  require_finite(b, "ks_two_sample");
  if (a.empty() || b.empty()) return 0.0;

  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());

  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= v) ++i;
    while (j < sb.size() && sb[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

KsResult ks_uniform_test(std::span<const double> values) {
  require_finite(values, "ks_uniform_test");
  if (values.empty()) throw InvalidInput("ks_uniform_test: empty sample");

  const auto s = sorted_copy(values);
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double u = std::clamp(s[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / n - u, u - static_cast<double>(i) / n});
  }

  const double rn = std::sqrt(n);
  const double lambda = (rn + 0.12 + 0.11 / rn) * d;
  double p = 1.0;
  if (lambda > 0.2) {
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += sign * term;
      if (term < 1e-16) break;
      sign = -sign;
    }
    p = std::clamp(2.0 * sum, 0.0, 1.0);
  }
  return {d, p};
}

double chi_square_sf(double s, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("chi_square_sf: degrees of freedom must be > 0");
  if (!(s >= 0.0)) throw DomainError("chi_square_sf: statistic must be >= 0");
  if (s == 0.0) return 1.0;
  if (std::isinf(s)) return 0.0;
  return boost::math::gamma_q(0.5 * nu, 0.5 * s);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return values[l] < values[r]; });

  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

double pearson_r(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InvalidInput("correlation: length mismatch");
  if (u.size() < 2) throw InvalidInput("correlation: need at least two pairs");
  require_finite(u, "correlation");
  require_finite(v, "correlation");

  const double n = static_cast<double>(u.size());
  const double mu = std::accumulate(u.begin(), u.end(), 0.0) / n;
  const double mv = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double suu = 0.0, svv = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
  }
  if (suu <= 0.0 || svv <= 0.0) throw UndefinedCorrelation("correlation: zero variance");
  return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

double spearman_rho(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw InvalidInput("spearman_rho: length mismatch");
  if (u.size() < 2) throw InvalidInput("spearman_rho: need at least two pairs");
  const auto ru = midranks(u);
  const auto rv = midranks(v);
  return pearson_r(ru, rv);
}

Interval wilson_ci(std::size_t successes, std::size_t trials, double level) {
  if (trials == 0) throw InvalidInput("wilson_ci: trials must be >= 1");
  if (successes > trials) throw InvalidInput("wilson_ci: successes exceed trials");
  if (!(level > 0.0 && level < 1.0)) throw InvalidInput("wilson_ci: level must lie in (0,1)");

  const double z = normal_quantile(0.5 + 0.5 * level);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;

  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (successes == 0) ci.lo = 0.0;
  if (successes == trials) ci.hi = 1.0;
  // Rounding can push an endpoint past p by an ulp.
  ci.lo = std::min(ci.lo, p);
  ci.hi = std::max(ci.hi, p);
  return ci;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("quantile: q must lie in [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace twostep
