#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "twostep/errors.hpp"
#include "twostep/harness.hpp"
#include "twostep/stats_kernel.hpp"

using namespace twostep;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  ScenarioSpec null_point;
  null_point.kind = ScenarioKind::null;
  null_point.n = 40;
  null_point.pi0 = 0.3;
  ScenarioSpec tail_point = null_point;
  tail_point.kind = ScenarioKind::tail_only;
  tail_point.delta = 4.0;
  c.grid = {null_point, tail_point};
  c.methods = {Method::aksa, Method::fisher, Method::brown};
  c.replicates = 30;
  c.n_perms = 100;
  c.master_seed = 99;
  return c;
}

bool same_cells(const std::vector<CellResult>& a, const std::vector<CellResult>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].point != b[i].point || a[i].method != b[i].method || a[i].rejections != b[i].rejections ||
        a[i].rate != b[i].rate || a[i].ci_lo != b[i].ci_lo || a[i].ci_hi != b[i].ci_hi) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(RunGrid, CellOrderRatesAndIntervals) {
  const auto cfg = small_config();
  const auto cells = run_grid(cfg);
  ASSERT_EQ(cells.size(), 6u);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    EXPECT_EQ(c.point, i / 3);
    EXPECT_EQ(c.method, cfg.methods[i % 3]);
    EXPECT_LE(c.rejections, c.replicates);
    EXPECT_EQ(c.rate, static_cast<double>(c.rejections) / static_cast<double>(c.replicates));
    const auto ci = wilson_ci(c.rejections, c.replicates);
    EXPECT_EQ(c.ci_lo, ci.lo);
    EXPECT_EQ(c.ci_hi, ci.hi);
    EXPECT_LE(c.ci_lo, c.rate);
    EXPECT_GE(c.ci_hi, c.rate);
  }
  // Tail signal at point 1 is strong.
  EXPECT_GT(cells[4].rate, 0.5);
}

TEST(RunGrid, IdenticalAcrossRunsAndThreadCounts) {
  auto cfg = small_config();
  cfg.threads = 1;
  const auto one = run_grid(cfg);
  cfg.threads = 8;
  const auto eight = run_grid(cfg);
  EXPECT_TRUE(same_cells(one, eight));
  EXPECT_TRUE(same_cells(one, run_grid(cfg)));
}

TEST(RunGrid, DoublingReplicatesKeepsFirstHalf) {
  auto cfg = small_config();
  cfg.replicates = 10;
  std::vector<ReplicateOutcome> first;
  for (std::size_t r = 0; r < 10; ++r) first.push_back(run_replicate(cfg, 1, r));
  cfg.replicates = 20;
  const auto doubled = run_point(cfg, 1);
  ASSERT_EQ(doubled.size(), 20u);
  for (std::size_t r = 0; r < 10; ++r) {
    EXPECT_EQ(doubled[r].p_fisher, first[r].p_fisher);
    EXPECT_EQ(doubled[r].p_aksa, first[r].p_aksa);
  }
}

TEST(RunGrid, SingleReplicateDegenerateDataset) {
  ExperimentConfig cfg;
  ScenarioSpec tiny;
  tiny.n = 4;
  tiny.pi0 = 0.0;  // no zeros and n+ < 5: both components degenerate
  cfg.grid = {tiny};
  cfg.methods = {Method::fisher};
  cfg.replicates = 1;
  cfg.n_perms = 10;
  const auto cells = run_grid(cfg);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].rate, 0.0);
  EXPECT_EQ(cells[0].ci_lo, 0.0);
  EXPECT_GT(cells[0].ci_hi, 0.5);
}

TEST(RunGrid, ReplicateFailuresAbortWithPointInMessage) {
  ExperimentConfig cfg;
  ScenarioSpec tiny;
  tiny.n = 4;
  cfg.grid = {tiny};
  cfg.methods = {Method::fisher};
  cfg.replicates = 2;
  cfg.n_perms = 10;
  cfg.methods = {Method::aksa};  // aksa needs n >= 5
  EXPECT_THROW(run_grid(cfg), InvalidInput);
}

TEST(RunGrid, InvalidConfigs) {
  auto cfg = small_config();
  cfg.replicates = 0;
  EXPECT_THROW(run_grid(cfg), InvalidInput);
  cfg = small_config();
  cfg.alpha = 1.0;
  EXPECT_THROW(run_grid(cfg), InvalidInput);
  cfg = small_config();
  cfg.methods.clear();
  EXPECT_THROW(run_grid(cfg), InvalidInput);
  cfg = small_config();
  cfg.grid.clear();
  EXPECT_THROW(run_grid(cfg), InvalidInput);
}

TEST(RunGrid, CellCorrelationMethods) {
  ExperimentConfig cfg;
  ScenarioSpec corr;
  corr.kind = ScenarioKind::correlated;
  corr.n = 60;
  corr.pi0 = 0.4;
  corr.k_scale = 2.0;
  cfg.grid = {corr};
  cfg.methods = {Method::fisher, Method::brown, Method::fisher_calibrated, Method::brown_cell};
  cfg.replicates = 40;
  cfg.n_perms = 100;
  cfg.calibration_draws = 2000;
  cfg.master_seed = 3;
  const auto cells = run_grid(cfg);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0].threshold, 0.05);
  EXPECT_TRUE(std::isnan(cells[0].rho));
  EXPECT_GE(cells[2].rho, 0.0);
  EXPECT_LE(cells[2].rho, 1.0);
  EXPECT_EQ(cells[2].rho, cells[3].rho);
  EXPECT_GT(cells[2].threshold, 0.0);
  EXPECT_LE(cells[2].threshold, 0.06);

  const auto diff = fisher_brown_differences(cells);
  ASSERT_EQ(diff.cells.size(), 1u);
  EXPECT_EQ(diff.cells[0].fisher_rate, cells[2].rate);
  EXPECT_EQ(diff.cells[0].brown_rate, cells[3].rate);
  EXPECT_EQ(diff.mean_difference, cells[2].rate - cells[3].rate);
}

TEST(CalibrateFisher, Examples) {
  EXPECT_NEAR(calibrate_fisher_threshold(0.0, 10000, 0.05, {1, 0}), 0.05, 0.006);
  const double t8 = calibrate_fisher_threshold(0.8, 10000, 0.05, {1, 0});
  EXPECT_LT(t8, 0.05);
  const double t1 = calibrate_fisher_threshold(1.0, 10000, 0.05, {1, 0});
  EXPECT_GT(t1, 0.0);
  EXPECT_LT(t1, 0.05);
  EXPECT_THROW(calibrate_fisher_threshold(0.5, 999, 0.05, {1, 0}), InvalidInput);
  EXPECT_THROW(calibrate_fisher_threshold(1.5, 1000, 0.05, {1, 0}), DomainError);
}

TEST(CopulaExperiment, RatesAndDeterminism) {
  const auto rows = copula_size_experiment({0.0, 0.8}, 10000, 0.05, {12, 0});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_NEAR(rows[0].fisher_rate, 0.05, 0.007);
  EXPECT_NEAR(rows[0].brown_rate, 0.05, 0.007);
  EXPECT_EQ(rows[0].fisher_rejections, rows[0].brown_rejections);
  EXPECT_NEAR(rows[1].fisher_rate, 0.09, 0.012);
  EXPECT_LE(rows[1].brown_rate, 0.06);
  EXPECT_LT(rows[1].fisher_threshold, 0.05);
  const auto again = copula_size_experiment({0.0, 0.8}, 10000, 0.05, {12, 0});
  EXPECT_EQ(again[1].fisher_rejections, rows[1].fisher_rejections);
}

TEST(CopulaExperiment, BrownConservativeAtTrueRho) {
  for (double rho : {0.2, 0.5, 0.8}) {
    const auto row = copula_size_experiment({rho}, 20000, 0.05, {13, 0})[0];
    const double se = std::sqrt(0.05 * 0.95 / 20000.0);
    EXPECT_LE(row.brown_rate, 0.05 + 3.0 * se) << rho;
  }
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {Method::aksa, Method::spike, Method::tail, Method::fisher, Method::brown,
                 Method::fisher_calibrated, Method::brown_cell}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("stouffer"), InvalidInput);
}
