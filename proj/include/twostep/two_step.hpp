#pragma once

// Spike test, tail test, full-data AKSA comparator, main-effect test, the
// Fisher/Brown combination rules and the two-step orchestrator.
//
// Every test is a pure function of (dataset, n_perms, seed): the seed's
// stream first breaks biomarker ties (where ordering matters) and then
// drives the label permutations, so reruns are bit-identical.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twostep/dataset.hpp"
#include "twostep/perm_engine.hpp"

namespace twostep {

inline constexpr std::size_t kDefaultPermutations = 1000;
/// Tail test is degenerate (p = 1) below this many positive-biomarker subjects.
inline constexpr std::size_t kMinTailPositives = 5;
/// Smallest permutation count for which a component correlation is estimated.
inline constexpr std::size_t kMinCorrelationPermutations = 10;

struct TestOutcome {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_perms = 0;
  std::optional<PermTrace> trace;
  /// Non-empty when the test could not be run; then statistic = 0, p = 1.
  std::string degenerate_reason;

  bool degenerate() const noexcept { return !degenerate_reason.empty(); }
};

/// Mean prefix-KS distance for a fixed subject order: the average of D_k
/// over prefixes k = 1..n-1, where D_k compares treated and control outcomes
/// among the first k subjects. Holds scratch buffers, so one instance must
/// not be shared between threads.
class PrefixKsStatistic {
 public:
  /// Throws InvalidInput for fewer than two subjects or non-finite outcomes.
  explicit PrefixKsStatistic(std::span<const double> y_in_order);

  double operator()(std::span<const Arm> arms_in_order);

  std::size_t size() const noexcept { return levels_.size(); }

 private:
  std::vector<std::int32_t> levels_;
  std::size_t n_levels_ = 0;
  std::vector<std::int32_t> c1_;
  std::vector<std::int32_t> c0_;
};

/// `subset` sorted by ascending x; equal x values are put in a random order
/// drawn from `rng`.
std::vector<std::size_t> biomarker_order(std::span<const double> x,
                                         std::span<const std::size_t> subset, Rng& rng);

/// |mean(y | G = 1) - mean(y | G = 0)| for four-level labels
/// G = t + 2 * 1{x > 0}. Returns 0 when either spike cell is empty.
double spike_statistic(std::span<const double> y, std::span<const std::uint8_t> groups);

/// Four-level labels G_i = t_i + 2 * 1{x_i > 0}.
std::vector<std::uint8_t> spike_groups(const TrialDataset& ds);

TestOutcome spike_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                       bool keep_trace = false);

TestOutcome tail_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                      bool keep_trace = false);

/// Prefix-KS average over all subjects (zeros first). Requires N >= 5.
TestOutcome aksa_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                      bool keep_trace = false);

/// |mean(y | t=1) - mean(y | t=0)| calibrated by permuting t over all
/// subjects. Requires both arms nonempty.
TestOutcome main_effect_test(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed,
                             bool keep_trace = false);

struct FisherResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// S = -2(ln p_a + ln p_b) referred to chi^2 with 4 df.
FisherResult fisher_combine(double p_a, double p_b);

struct BrownResult {
  double c = 1.0;
  double nu = 4.0;
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Brown's scaled chi-square with rho clamped to [0,1]: c = 1 + rho,
/// nu = 4/c, S_Brown = S_Fisher / c.
BrownResult brown_combine(double p_a, double p_b, double rho);

/// Spearman correlation between spike and tail statistics over joint
/// permutations of the treatment labels. Returns 0 when either component
/// is degenerate or either statistic sequence is constant.
/// Throws InvalidInput when n_perms < kMinCorrelationPermutations.
double estimate_component_correlation(const TrialDataset& ds, std::size_t n_perms,
                                      const SeedSpec& seed);

struct TwoStepResult {
  TestOutcome spike;
  TestOutcome tail;
  double s_fisher = 0.0;
  double p_fisher = 1.0;
  double rho_hat = 0.0;
  double c = 1.0;
  double nu = 4.0;
  double s_brown = 0.0;
  double p_brown = 1.0;
  /// Number of non-degenerate components. With one active component the
  /// combination reduces to that component's test (chi^2 with 2 df).
  int active_components = 0;
};

/// Combination step on two finished component tests.
TwoStepResult combine_components(TestOutcome spike, TestOutcome tail, double rho);

TwoStepResult two_step(const TrialDataset& ds, std::size_t n_perms, const SeedSpec& seed);

}  // namespace twostep
