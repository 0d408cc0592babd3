#include "twostep/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "twostep/errors.hpp"

namespace twostep {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Effect curve

struct ArmSample {
  std::vector<double> x;
  std::vector<double> y;
};

double local_linear(const ArmSample& s, double at, double h) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const double d = s.x[i] - at;
    const double u = d / h;
    const double w = std::exp(-0.5 * u * u);
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * s.y[i];
    t1 += w * d * s.y[i];
  }
  if (!(s0 > 1e-300)) return kNaN;
  const double den = s0 * s2 - s1 * s1;
  if (!(den > 1e-12 * s0 * s2)) return t0 / s0;  // design too narrow: local constant
  return (s2 * t0 - s1 * t1) / den;
}

struct CurveInputs {
  ArmSample treated;
  ArmSample control;
  std::vector<double> spike_treated;
  std::vector<double> spike_control;
};

CurveInputs split_subjects(const TrialDataset& ds, std::span<const std::size_t> subjects) {
  CurveInputs in;
  for (auto i : subjects) {
    const double x = ds.x()[i];
    const double y = ds.y()[i];
    const bool treated = ds.t()[i] == 1;
    if (x > 0.0) {
      auto& arm = treated ? in.treated : in.control;
      arm.x.push_back(x);
      arm.y.push_back(y);
    } else {
      (treated ? in.spike_treated : in.spike_control).push_back(y);
    }
  }
  return in;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> spike_contrast(const CurveInputs& in) {
  if (in.spike_treated.empty() || in.spike_control.empty()) return std::nullopt;
  return mean_of(in.spike_treated) - mean_of(in.spike_control);
}

void fill_curve(const CurveInputs& in, const std::vector<double>& grid, double h, std::vector<double>& out) {
  out.assign(grid.size(), kNaN);
  if (in.treated.x.empty() || in.control.x.empty()) return;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    out[g] = local_linear(in.treated, grid[g], h) - local_linear(in.control, grid[g], h);
  }
}

double silverman_bandwidth(std::vector<double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  const double iqr = quantile(x, 0.75) - quantile(x, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(n, -0.2);
}

// Percentile band that always contains the point estimate.
Estimate percentile_band(double estimate, std::vector<double> draws) {
  std::erase_if(draws, [](double v) { return !std::isfinite(v); });
  if (draws.empty()) return {estimate, estimate, estimate};
  const double lo = quantile(draws, 0.025);
  const double hi = quantile(draws, 0.975);
  return {estimate, std::min(lo, estimate), std::max(hi, estimate)};
}

std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

// ---------------------------------------------------------------------------
// Cut-points

// Subjects sorted by x with the end offsets of each block of equal x.
struct SortedTrial {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<Arm> t;
  std::vector<std::size_t> block_end;
};

SortedTrial sort_by_biomarker(const TrialDataset& ds, std::span<const std::size_t> subjects) {
  std::vector<std::size_t> order(subjects.begin(), subjects.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ds.x()[a] < ds.x()[b]; });
  SortedTrial s;
  s.x.reserve(order.size());
  for (auto i : order) {
    s.x.push_back(ds.x()[i]);
    s.y.push_back(ds.y()[i]);
    s.t.push_back(ds.t()[i]);
  }
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (i + 1 == s.x.size() || s.x[i + 1] != s.x[i]) s.block_end.push_back(i + 1);
  }
  return s;
}

template <typename Visit>
void scan_cutpoints(const SortedTrial& s, std::span<const Arm> t, std::size_t min_per_cell, Visit&& visit) {
  double sum1 = 0.0, sum0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < s.y.size(); ++i) {
    if (t[i]) {
      sum1 += s.y[i];
      ++n1;
    } else {
      sum0 += s.y[i];
      ++n0;
    }
  }

  double le1 = 0.0, le0 = 0.0;
  std::size_t m1 = 0, m0 = 0;
  std::size_t i = 0;
  for (std::size_t end : s.block_end) {
    for (; i < end; ++i) {
      if (t[i]) {
        le1 += s.y[i];
        ++m1;
      } else {
        le0 += s.y[i];
        ++m0;
      }
    }
    const std::size_t g1 = n1 - m1, g0 = n0 - m0;
    if (m1 < min_per_cell || m0 < min_per_cell || g1 < min_per_cell || g0 < min_per_cell) continue;
    Cutpoint c;
    c.tau = s.x[end - 1];
    c.delta_le = le1 / static_cast<double>(m1) - le0 / static_cast<double>(m0);
    c.delta_gt = (sum1 - le1) / static_cast<double>(g1) - (sum0 - le0) / static_cast<double>(g0);
    c.contrast = std::abs(c.delta_gt - c.delta_le);
    visit(c);
  }
}

std::optional<Cutpoint> best_cutpoint(const SortedTrial& s, std::span<const Arm> t, std::size_t min_per_cell) {
  std::optional<Cutpoint> best;
  scan_cutpoints(s, t, min_per_cell, [&](const Cutpoint& c) {
    if (!best || c.contrast > best->contrast) best = c;  // strict: ties keep the smaller tau
  });
  return best;
}

std::string infeasible_message(std::size_t min_per_cell) {
  return "no biomarker threshold leaves at least " + std::to_string(min_per_cell) +
         " treated and " + std::to_string(min_per_cell) + " control subjects on each side";
}

}  // namespace

EffectCurve effect_curve(const TrialDataset& ds, std::size_t grid_size, std::size_t n_boot,
                         const SeedSpec& seed) {
  if (grid_size == 0) throw InvalidInput("effect_curve: grid_size must be >= 1");
  if (n_boot == 0) throw InvalidInput("effect_curve: n_boot must be >= 1");

  std::vector<std::size_t> everyone(ds.size());
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  const CurveInputs observed = split_subjects(ds, everyone);

  EffectCurve curve;
  Rng rng = derive_stream(seed);
  const auto spike = spike_contrast(observed);

  bool curve_ok = true;
  if (ds.n_positive() < kMinTailPositives) {
    curve.degenerate_reason = "fewer than 5 positive-biomarker subjects";
    curve_ok = false;
  } else if (observed.treated.x.size() < 2 || observed.control.x.size() < 2) {
    curve.degenerate_reason = "an arm has fewer than two positive-biomarker subjects";
    curve_ok = false;
  }

  std::vector<double> pos_x;
  for (auto i : ds.positive_indices()) pos_x.push_back(ds.x()[i]);
  if (curve_ok) {
    curve.bandwidth = silverman_bandwidth(pos_x);
    if (!(curve.bandwidth > 0.0)) {
      curve.degenerate_reason = "positive biomarker values are constant";
      curve_ok = false;
    }
  }

  if (!curve_ok && !spike) return curve;

  std::vector<double> grid;
  std::vector<double> estimate;
  if (curve_ok) {
    const auto [lo_it, hi_it] = std::minmax_element(pos_x.begin(), pos_x.end());
    const double lo = *lo_it, hi = *hi_it;
    for (std::size_t g = 0; g < grid_size; ++g) {
      grid.push_back(grid_size == 1 ? lo : lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_size - 1));
    }
    fill_curve(observed, grid, curve.bandwidth, estimate);
  }

  std::vector<std::vector<double>> boot_curve(grid.size());
  std::vector<double> boot_spike;
  std::vector<double> scratch;
  for (std::size_t b = 0; b < n_boot; ++b) {
    const auto idx = bootstrap_sample(ds.size(), rng);
    const CurveInputs in = split_subjects(ds, idx);
    if (curve_ok) {
      fill_curve(in, grid, curve.bandwidth, scratch);
      for (std::size_t g = 0; g < grid.size(); ++g) boot_curve[g].push_back(scratch[g]);
    }
    if (spike) {
      if (auto s = spike_contrast(in)) boot_spike.push_back(*s);
    }
  }

  if (curve_ok) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto band = percentile_band(estimate[g], std::move(boot_curve[g]));
      curve.points.push_back({grid[g], estimate[g], band.lo, band.hi});
    }
  }
  if (spike) curve.spike_effect = percentile_band(*spike, std::move(boot_spike));
  return curve;
}

DiagnosticsReport diagnose(const TrialDataset& ds, std::size_t n_perms, std::size_t n_boot,
                           const SeedSpec& seed, std::size_t grid_size) {
  if (ds.n_treated() == 0 || ds.n_control() == 0) throw InvalidInput("diagnose: both arms must be nonempty");
  if (n_perms == 0 || n_boot == 0) throw InvalidInput("diagnose: n_perms and n_boot must be >= 1");

  DiagnosticsReport r;
  r.primary = two_step(ds, n_perms, child_seed(seed, 1));
  r.main_effect = main_effect_test(ds, n_perms, child_seed(seed, 2));
  r.delta_main_hat = arm_mean_difference(ds.y(), ds.t());

  std::vector<double> centred(ds.y().begin(), ds.y().end());
  for (std::size_t i = 0; i < centred.size(); ++i) {
    if (ds.t()[i]) centred[i] -= r.delta_main_hat;
  }
  r.interaction_only = two_step(ds.with_outcomes(std::move(centred)), n_perms, child_seed(seed, 3));
  r.curve = effect_curve(ds, grid_size, n_boot, child_seed(seed, 4));
  return r;
}

std::vector<Cutpoint> evaluate_cutpoints(const TrialDataset& ds, std::size_t min_per_cell) {
  std::vector<std::size_t> everyone(ds.size());
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  const auto sorted = sort_by_biomarker(ds, everyone);
  std::vector<Cutpoint> out;
  scan_cutpoints(sorted, sorted.t, min_per_cell, [&](const Cutpoint& c) { out.push_back(c); });
  return out;
}

CutpointResult select_cutpoint(const TrialDataset& ds, std::size_t min_per_cell, std::size_t n_perms,
                               std::size_t n_boot, const SeedSpec& seed) {
  if (min_per_cell == 0) throw InvalidInput("select_cutpoint: min_per_cell must be >= 1");
  if (n_perms == 0 || n_boot == 0) throw InvalidInput("select_cutpoint: n_perms and n_boot must be >= 1");

  std::vector<std::size_t> everyone(ds.size());
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  const auto sorted = sort_by_biomarker(ds, everyone);

  std::size_t n_candidates = 0;
  scan_cutpoints(sorted, sorted.t, min_per_cell, [&](const Cutpoint&) { ++n_candidates; });
  const auto best = best_cutpoint(sorted, sorted.t, min_per_cell);
  if (!best) throw InfeasibleError(infeasible_message(min_per_cell));

  CutpointResult r;
  r.tau_hat = best->tau;
  r.c_hat = best->contrast;
  r.n_candidates = n_candidates;
  r.n_perms = n_perms;

  Rng perm_rng = derive_stream(child_seed(seed, 1));
  std::vector<Arm> arms = sorted.t;
  std::vector<double> permuted;
  permuted.reserve(n_perms);
  for (std::size_t b = 0; b < n_perms; ++b) {
    std::shuffle(arms.begin(), arms.end(), perm_rng);
    const auto c = best_cutpoint(sorted, arms, min_per_cell);
    permuted.push_back(c ? c->contrast : 0.0);
  }
  r.p_perm = permutation_pvalue(best->contrast, permuted);

  Rng boot_rng = derive_stream(child_seed(seed, 2));
  std::vector<double> taus, les, gts;
  for (std::size_t b = 0; b < n_boot; ++b) {
    const auto idx = bootstrap_sample(ds.size(), boot_rng);
    const auto resample = sort_by_biomarker(ds, idx);
    if (const auto c = best_cutpoint(resample, resample.t, min_per_cell)) {
      taus.push_back(c->tau);
      les.push_back(c->delta_le);
      gts.push_back(c->delta_gt);
    }
  }
  r.n_boot_used = taus.size();
  auto interval = [](double est, const std::vector<double>& v) {
    if (v.empty()) return Estimate{est, est, est};
    return Estimate{est, quantile(v, 0.025), quantile(v, 0.975)};
  };
  const auto tau_band = interval(best->tau, taus);
  r.tau_ci = {tau_band.lo, tau_band.hi};
  r.delta_le = interval(best->delta_le, les);
  r.delta_gt = interval(best->delta_gt, gts);
  return r;
}

}  // namespace twostep
