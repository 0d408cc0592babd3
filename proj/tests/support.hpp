#pragma once

// Shared fixtures and brute-force oracles for the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "twostep/dataset.hpp"
#include "twostep/perm_engine.hpp"
#include "twostep/two_step.hpp"

namespace twostep::support {

inline TrialDataset make_dataset(std::vector<double> y, std::vector<int> t, std::vector<double> x) {
  std::vector<Arm> arms(t.begin(), t.end());
  return TrialDataset(std::move(y), std::move(arms), std::move(x));
}

// sup |F_a - F_b| evaluated at every pooled point; right-continuous ECDFs.
inline double brute_force_ks(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return 0.0;
  auto ecdf = [](std::span<const double> s, double v) {
    return static_cast<double>(std::count_if(s.begin(), s.end(), [&](double u) { return u <= v; })) /
           static_cast<double>(s.size());
  };
  double best = 0.0;
  for (auto pool : {a, b}) {
    for (double v : pool) best = std::max(best, std::abs(ecdf(a, v) - ecdf(b, v)));
  }
  return best;
}

// Mean over prefixes k = 1..n-1 of the two-sample KS distance between arms,
// subjects already in biomarker order.
inline double brute_force_prefix_ks(std::span<const double> y, std::span<const Arm> arms) {
  double sum = 0.0;
  for (std::size_t k = 1; k < y.size(); ++k) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < k; ++i) (arms[i] ? a : b).push_back(y[i]);
    sum += brute_force_ks(a, b);
  }
  return sum / static_cast<double>(y.size() - 1);
}

// Balanced random dataset with a zero block of size n_zero.
inline TrialDataset random_dataset(std::size_t n, std::size_t n_zero, std::uint64_t seed,
                                   bool integer_outcomes = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  std::vector<double> y(n), x(n);
  std::vector<Arm> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = integer_outcomes ? std::round(2.0 * normal(rng)) : normal(rng);
    x[i] = i < n_zero ? 0.0 : unif(rng);
    t[i] = static_cast<Arm>(i % 2);
  }
  std::shuffle(t.begin(), t.end(), rng);
  return TrialDataset(std::move(y), std::move(t), std::move(x));
}


struct ExhaustivePvalues {
  double exact = 1.0;       // #{arrangements with T >= T_obs} / #arrangements
  double with_trace = 1.0;  // add-one estimator fed every non-identity arrangement
  std::uint64_t arrangements = 0;
};

// `statistic(labels)` evaluated on every distinct arrangement of `labels`.
template <typename Statistic>
ExhaustivePvalues exhaustive_pvalues(const std::vector<int>& labels, Statistic&& statistic) {
  const double observed = statistic(std::span<const int>(labels));
  const LabelArrangements all(labels, 1u << 20);
  std::uint64_t at_least = 0;
  bool identity_seen = false;
  PermTrace trace;
  trace.observed = observed;
  all.for_each([&](std::span<const int> a) {
    const double v = statistic(a);
    if (v >= observed) ++at_least;
    if (!identity_seen && std::equal(a.begin(), a.end(), labels.begin())) {
      identity_seen = true;
      return;
    }
    trace.permuted.push_back(v);
  });
  ExhaustivePvalues out;
  out.arrangements = all.size();
  out.exact = static_cast<double>(at_least) / static_cast<double>(all.size());
  out.with_trace = trace.permuted.empty() ? 1.0 : permutation_pvalue(trace);
  return out;
}

inline ExhaustivePvalues exhaustive_spike(const TrialDataset& ds) {
  const auto g = spike_groups(ds);
  const std::vector<int> labels(g.begin(), g.end());
  const auto y = ds.y();
  return exhaustive_pvalues(labels, [&](std::span<const int> a) {
    std::vector<std::uint8_t> groups(a.begin(), a.end());
    return spike_statistic(y, groups);
  });
}

// Positive x values must be distinct so the biomarker order is fixed.
inline ExhaustivePvalues exhaustive_tail(const TrialDataset& ds) {
  auto pos = std::vector<std::size_t>(ds.positive_indices().begin(), ds.positive_indices().end());
  std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) { return ds.x()[a] < ds.x()[b]; });
  std::vector<double> y;
  std::vector<int> labels;
  for (auto i : pos) {
    y.push_back(ds.y()[i]);
    labels.push_back(ds.t()[i]);
  }
  PrefixKsStatistic stat(y);
  return exhaustive_pvalues(labels, [&](std::span<const int> a) {
    std::vector<Arm> arms(a.begin(), a.end());
    return stat(arms);
  });
}

inline ExhaustivePvalues exhaustive_main_effect(const TrialDataset& ds) {
  const std::vector<int> labels(ds.t().begin(), ds.t().end());
  const auto y = ds.y();
  return exhaustive_pvalues(labels, [&](std::span<const int> a) {
    std::vector<Arm> arms(a.begin(), a.end());
    return std::abs(arm_mean_difference(y, arms));
  });
}

}  // namespace twostep::support
