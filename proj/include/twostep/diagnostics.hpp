#pragma once

// Post-rejection diagnosis (component p-values, main-effect test,
// interaction-only re-test, effect curve with bootstrap band) and
// cut-point selection with selection-adjusted permutation inference.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "twostep/dataset.hpp"
#include "twostep/perm_engine.hpp"
#include "twostep/stats_kernel.hpp"
#include "twostep/two_step.hpp"

namespace twostep {

inline constexpr std::size_t kDefaultBootstrap = 1000;
inline constexpr std::size_t kDefaultCurveGrid = 25;

struct Estimate {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct CurvePoint {
  double x = 0.0;
  double effect = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
};

struct EffectCurve {
  std::vector<CurvePoint> points;
  double bandwidth = 0.0;
  /// Set when the curve could not be estimated (points is then empty).
  std::string degenerate_reason;
  /// Spike contrast mean(y | T=1, X=0) - mean(y | T=0, X=0) with its own
  /// band; absent when either spike cell is empty.
  std::optional<Estimate> spike_effect;

  bool degenerate() const noexcept { return !degenerate_reason.empty(); }
};

/// Treatment-effect curve over the positive biomarker range.
///
/// Each arm's regression of y on x among positive-biomarker subjects is
/// estimated by local-linear smoothing with a Gaussian kernel (Silverman
/// bandwidth on the positive x values); the curve is the treated minus
/// control fit on `grid_size` equally spaced points. The band is the
/// 2.5/97.5 percentile range over `n_boot` subject-level bootstrap
/// resamples, widened if needed so it always contains the estimate.
EffectCurve effect_curve(const TrialDataset& ds, std::size_t grid_size, std::size_t n_boot,
                         const SeedSpec& seed);

struct DiagnosticsReport {
  TwoStepResult primary;
  TestOutcome main_effect;
  double delta_main_hat = 0.0;
  TwoStepResult interaction_only;  // two-step on treated-centred outcomes
  EffectCurve curve;
};

/// Runs the full diagnostic routine. Throws InvalidInput if an arm is empty.
DiagnosticsReport diagnose(const TrialDataset& ds, std::size_t n_perms, std::size_t n_boot,
                           const SeedSpec& seed, std::size_t grid_size = kDefaultCurveGrid);

struct Cutpoint {
  double tau = 0.0;
  double contrast = 0.0;  // C(tau) = |delta_gt - delta_le|
  double delta_le = 0.0;
  double delta_gt = 0.0;
};

/// Every admissible threshold (unique x leaving >= min_per_cell treated and
/// control subjects on each side) with its stratum contrasts, ascending tau.
std::vector<Cutpoint> evaluate_cutpoints(const TrialDataset& ds, std::size_t min_per_cell);

struct CutpointResult {
  double tau_hat = 0.0;
  double c_hat = 0.0;
  double p_perm = 1.0;
  Interval tau_ci;
  Estimate delta_le;
  Estimate delta_gt;
  std::size_t n_candidates = 0;
  std::size_t n_perms = 0;
  std::size_t n_boot_used = 0;  // resamples that admitted at least one candidate
};

/// tau_hat = argmax C(tau) (ties toward the smallest tau). The p-value
/// recomputes the maximum over admissible thresholds for each permutation
/// of the arm labels; intervals are percentile bootstrap over subjects with
/// tau re-optimised per resample. Throws InfeasibleError when no threshold
/// satisfies the cell constraint.
CutpointResult select_cutpoint(const TrialDataset& ds, std::size_t min_per_cell, std::size_t n_perms,
                               std::size_t n_boot, const SeedSpec& seed);

}  // namespace twostep
