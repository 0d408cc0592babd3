#include "twostep/two_step.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twostep/errors.hpp"
#include "twostep/kernels/prefix_ks.hpp"
#include "twostep/stats_kernel.hpp"

namespace twostep {
namespace {

void require_perms(std::size_t n_perms, const char* who) {
  if (n_perms == 0) throw InvalidInput(std::string(who) + ": n_perms must be >= 1");
}

TestOutcome degenerate_outcome(std::string reason) {
  TestOutcome out;
  out.degenerate_reason = std::move(reason);
  return out;
}

// Runs `n_perms` draws of `statistic_of_permutation()` and fills the outcome.
template <typename PermutedStatistic>
TestOutcome run_permutations(double observed, std::size_t n_perms, bool keep_trace,
                             PermutedStatistic&& permuted_statistic) {
  PermTrace trace;
  trace.observed = observed;
  trace.permuted.reserve(n_perms);
  for (std::size_t b = 0; b < n_perms; ++b) trace.permuted.push_back(permuted_statistic());

  TestOutcome out;
  out.statistic = observed;
  out.p_value = permutation_pvalue(trace);
  out.n_perms = n_perms;
  if (keep_trace) out.trace = std::move(trace);
  return out;
}

template <typename T>
std::vector<T> gather(std::span<const T> values, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(values[i]);
  return out;
}

void require_valid_p(double p, const char* who) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError(std::string(who) + ": p-values must lie in (0,1]");
}

// |mean(y | arm=1) - mean(y | arm=0)| over `idx`; 0 when an arm is absent.
double subset_abs_mean_difference(std::span<const double> y, std::span<const Arm> t,
                                  std::span<const std::size_t> idx) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (auto i : idx) {
    if (t[i]) {
      s1 += y[i];
      ++n1;
    } else {
      s0 += y[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) return 0.0;
  return std::abs(s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0));
}

}  // namespace

PrefixKsStatistic::PrefixKsStatistic(std::span<const double> y_in_order) {
  if (y_in_order.size() < 2) throw InvalidInput("prefix KS statistic: need at least two subjects");
  std::vector<double> distinct(y_in_order.begin(), y_in_order.end());
  for (double v : distinct) {
    if (!std::isfinite(v)) throw InvalidInput("prefix KS statistic: non-finite outcome");
  }
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  levels_.reserve(y_in_order.size());
  for (double v : y_in_order) {
    const auto it = std::lower_bound(distinct.begin(), distinct.end(), v);
    levels_.push_back(static_cast<std::int32_t>(it - distinct.begin()));
  }
  n_levels_ = distinct.size();
  c1_.assign(kernels::padded_levels(n_levels_), 0);
  c0_.assign(kernels::padded_levels(n_levels_), 0);
}

double PrefixKsStatistic::operator()(std::span<const Arm> arms_in_order) {
  if (arms_in_order.size() != levels_.size()) {
    throw InvalidInput("prefix KS statistic: arm vector length mismatch");
  }
  const std::size_t n_prefixes = levels_.size() - 1;
  const double sum = kernels::prefix_ks_sum({levels_, arms_in_order, n_levels_, n_prefixes, c1_, c0_});
  return sum / static_cast<double>(n_prefixes);
}

std::vector<std::size_t> biomarker_order(std::span<const double> x,
                                         std::span<const std::size_t> subset, Rng& rng) {
  std::vector<std::size_t> order(subset.begin(), subset.end());
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return order;
}

double spike_statistic(std::span<const double> y, std::span<const std::uint8_t> groups) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (groups[i] == 1) {
      s1 += y[i];
      ++n1;
    } else if (groups[i] == 0) {
      s0 += y[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) return 0.0;
  return std::abs(s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0));
}

std::vector<std::uint8_t> spike_groups(const TrialDataset& ds) {
  std::vector<std::uint8_t> g(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    g[i] = static_cast<std::uint8_t>(ds.t()[i] + (ds.x()[i] > 0.0 ? 2 : 0));
  }
  return g;
}

TestOutcome spike_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                       bool keep_trace) {
  require_perms(n_perms, "spike_test");
  if (ds.n_zero() == 0) return degenerate_outcome("no zero-biomarker subjects");

  auto groups = spike_groups(ds);
  const auto n10 = std::count(groups.begin(), groups.end(), std::uint8_t{1});
  const auto n00 = std::count(groups.begin(), groups.end(), std::uint8_t{0});
  if (n10 == 0 || n00 == 0) return degenerate_outcome("a spike cell (zero biomarker, one arm) is empty");

  const auto y = ds.y();
  const double observed = spike_statistic(y, groups);
  Rng rng = derive_stream(seed);
  return run_permutations(observed, n_perms, keep_trace, [&] {
    std::shuffle(groups.begin(), groups.end(), rng);
    return spike_statistic(y, groups);
  });
}

TestOutcome tail_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                      bool keep_trace) {
  require_perms(n_perms, "tail_test");
  if (ds.n_positive() < kMinTailPositives) {
    return degenerate_outcome("fewer than 5 positive-biomarker subjects");
  }

  Rng rng = derive_stream(seed);
  const auto order = biomarker_order(ds.x(), ds.positive_indices(), rng);
  const auto y = gather(ds.y(), order);
  auto arms = gather(ds.t(), order);

  PrefixKsStatistic statistic(y);
  const double observed = statistic(arms);
  return run_permutations(observed, n_perms, keep_trace, [&] {
    std::shuffle(arms.begin(), arms.end(), rng);
    return statistic(arms);
  });
}

TestOutcome aksa_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                      bool keep_trace) {
  require_perms(n_perms, "aksa_test");
  if (ds.size() < 5) throw InvalidInput("aksa_test: need at least 5 subjects");

  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng = derive_stream(seed);
  const auto order = biomarker_order(ds.x(), all, rng);
  const auto y = gather(ds.y(), order);
  auto arms = gather(ds.t(), order);

  PrefixKsStatistic statistic(y);
  const double observed = statistic(arms);
  return run_permutations(observed, n_perms, keep_trace, [&] {
    std::shuffle(arms.begin(), arms.end(), rng);
    return statistic(arms);
  });
}

TestOutcome main_effect_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                             bool keep_trace) {
  require_perms(n_perms, "main_effect_test");
  if (ds.n_treated() == 0 || ds.n_control() == 0) {
    throw InvalidInput("main_effect_test: both arms must be nonempty");
  }
  const auto y = ds.y();
  std::vector<Arm> arms(ds.t().begin(), ds.t().end());
  const double observed = std::abs(arm_mean_difference(y, arms));
  Rng rng = derive_stream(seed);
  return run_permutations(observed, n_perms, keep_trace, [&] {
    std::shuffle(arms.begin(), arms.end(), rng);
    return std::abs(arm_mean_difference(y, arms));
  });
}

FisherResult fisher_combine(double p_a, double p_b) {
  require_valid_p(p_a, "fisher_combine");
  require_valid_p(p_b, "fisher_combine");
  const double s = -2.0 * (std::log(p_a) + std::log(p_b));
  return {s, chi_square_sf(s, 4.0)};
}

BrownResult brown_combine(double p_a, double p_b, double rho) {
  require_valid_p(p_a, "brown_combine");
  require_valid_p(p_b, "brown_combine");
  if (!std::isfinite(rho)) throw DomainError("brown_combine: rho must be finite");
  const double rho_eff = std::clamp(rho, 0.0, 1.0);
  const double c = 1.0 + rho_eff;
  const double nu = 4.0 / c;
  const double s = -2.0 * (std::log(p_a) + std::log(p_b)) / c;
  return {c, nu, s, chi_square_sf(s, nu)};
}

double estimate_component_correlation(const TrialDataset& ds, std::size_t n_perms,
                                      const SeedSpec& seed) {
  if (n_perms < kMinCorrelationPermutations) {
    throw InvalidInput("estimate_component_correlation: n_perms must be >= 10");
  }
  if (ds.n_zero() < 1 || ds.n_positive() < kMinTailPositives) return 0.0;

  Rng rng = derive_stream(seed);
  const auto order = biomarker_order(ds.x(), ds.positive_indices(), rng);
  const auto y_tail = gather(ds.y(), order);
  PrefixKsStatistic tail_statistic(y_tail);

  std::vector<Arm> arms(ds.t().begin(), ds.t().end());
  std::vector<Arm> tail_arms(order.size());
  std::vector<double> spike_stats, tail_stats;
  spike_stats.reserve(n_perms);
  tail_stats.reserve(n_perms);
  for (std::size_t b = 0; b < n_perms; ++b) {
    std::shuffle(arms.begin(), arms.end(), rng);
    spike_stats.push_back(subset_abs_mean_difference(ds.y(), arms, ds.zero_indices()));
    for (std::size_t k = 0; k < order.size(); ++k) tail_arms[k] = arms[order[k]];
    tail_stats.push_back(tail_statistic(tail_arms));
  }

  try {
    return spearman_rho(spike_stats, tail_stats);
  } catch (const UndefinedCorrelation&) {
    return 0.0;
  }
}

TwoStepResult combine_components(TestOutcome spike, TestOutcome tail, double rho) {
  TwoStepResult r;
  r.active_components = static_cast<int>(!spike.degenerate()) + static_cast<int>(!tail.degenerate());

  if (r.active_components == 2) {
    r.rho_hat = rho;
    const auto fisher = fisher_combine(spike.p_value, tail.p_value);
    const auto brown = brown_combine(spike.p_value, tail.p_value, rho);
    r.s_fisher = fisher.statistic;
    r.p_fisher = fisher.p_value;
    r.c = brown.c;
    r.nu = brown.nu;
    r.s_brown = brown.statistic;
    r.p_brown = brown.p_value;
  } else if (r.active_components == 1) {
    // A degenerate component carries p = 1 (ln p = 0) and no information:
    // the combination reduces to the remaining single-part test.
    r.s_fisher = -2.0 * (std::log(spike.p_value) + std::log(tail.p_value));
    r.p_fisher = chi_square_sf(r.s_fisher, 2.0);
    r.c = 1.0;
    r.nu = 2.0;
    r.s_brown = r.s_fisher;
    r.p_brown = r.p_fisher;
  }
  r.spike = std::move(spike);
  r.tail = std::move(tail);
  return r;
}

TwoStepResult two_step(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed) {
  require_perms(n_perms, "two_step");
  auto spike = spike_test(ds, n_perms, child_seed(seed, 1));
  auto tail = tail_test(ds, n_perms, child_seed(seed, 2));
  double rho = 0.0;
  if (!spike.degenerate() && !tail.degenerate() && n_perms >= kMinCorrelationPermutations) {
    rho = estimate_component_correlation(ds, n_perms, child_seed(seed, 3));
  }
  return combine_components(std::move(spike), std::move(tail), rho);
}

}  // namespace twostep
