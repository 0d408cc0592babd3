// Desk-scale acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "twostep/harness.hpp"
#include "twostep/simgen.hpp"
#include "twostep/stats_kernel.hpp"
#include "twostep/theory.hpp"
#include "twostep/two_step.hpp"

using namespace twostep;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr double kNoLimit = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double mc_se(double rate, std::size_t n) { return std::sqrt(rate * (1.0 - rate) / static_cast<double>(n)); }

ScenarioSpec point(ScenarioKind kind, std::size_t n, double pi0) {
  ScenarioSpec s;
  s.kind = kind;
  s.n = n;
  s.pi0 = pi0;
  return s;
}

const CellResult& cell(const std::vector<CellResult>& cells, std::size_t pt, Method m) {
  for (const auto& c : cells) {
    if (c.point == pt && c.method == m) return c;
  }
  throw std::logic_error("missing cell");
}

std::string describe(const CellResult& c) {
  return to_string(c.method) + "(pi0=" + fmt("%g", c.scenario.pi0) + ")=" + fmt("%.3f", c.rate);
}

Outcome fisher_exactness() {
  const auto pairs = generate_pvalue_pairs(0.0, 100000, {2001, 0});
  std::vector<double> p;
  p.reserve(pairs.size());
  std::size_t rejections = 0;
  for (const auto& pr : pairs) {
    p.push_back(fisher_combine(pr.p_a, pr.p_b).p_value);
    if (p.back() < 0.05) ++rejections;
  }
  const double ks_p = ks_uniform_test(p).p_value;
  const double rate = static_cast<double>(rejections) / static_cast<double>(p.size());
  return {ks_p > 0.01 && std::abs(rate - 0.05) <= 0.004,
          "KS p=" + fmt("%.3f", ks_p) + " rate=" + fmt("%.4f", rate)};
}

Outcome fisher_inflation() {
  const auto rows = copula_size_experiment({0.4, 0.8}, 10000, 0.05, {2002, 0});
  const double r4 = rows[0].fisher_rate, r8 = rows[1].fisher_rate;
  return {r8 >= 0.078 && r8 <= 0.102 && r4 > 0.062,
          "fisher rate rho=0.4: " + fmt("%.4f", r4) + ", rho=0.8: " + fmt("%.4f", r8)};
}

Outcome brown_conservative() {
  const auto rows = copula_size_experiment({0.0, 0.2, 0.4, 0.6, 0.8}, 10000, 0.05, {2003, 0});
  bool ok = true;
  std::string detail = "brown rates";
  for (const auto& r : rows) {
    ok = ok && r.brown_rate >= 0.035 && r.brown_rate <= 0.065;
    detail += " " + fmt("%.4f", r.brown_rate);
  }
  return {ok, detail};
}

Outcome within_band(const std::vector<CellResult>& cells, double lo, double hi) {
  bool ok = true;
  std::string detail;
  for (const auto& c : cells) {
    ok = ok && c.rate >= lo && c.rate <= hi;
    if (!detail.empty()) detail += ' ';
    detail += describe(c);
  }
  return {ok, detail};
}

Outcome global_null() {
  ExperimentConfig cfg;
  for (double pi0 : {0.0, 0.4, 0.8}) cfg.grid.push_back(point(ScenarioKind::null, 60, pi0));
  cfg.methods = {Method::aksa, Method::fisher, Method::brown};
  cfg.replicates = 1000;
  cfg.n_perms = 1000;
  cfg.master_seed = 2004;
  return within_band(run_grid(cfg), 0.03, 0.07);
}

Outcome aksa_power_anchor() {
  ExperimentConfig cfg;
  const std::vector<double> pis{0.0, 0.2, 0.4, 0.6, 0.8};
  for (double pi0 : pis) {
    auto s = point(ScenarioKind::tail_only, 120, pi0);
    s.delta = 5.0;
    cfg.grid.push_back(s);
  }
  cfg.methods = {Method::aksa};
  cfg.replicates = 500;
  cfg.n_perms = 500;
  cfg.master_seed = 2005;
  const auto cells = run_grid(cfg);
  // pi0 = 0.5 is not on the monotonicity grid; run it as its own point.
  ExperimentConfig half = cfg;
  half.grid = {cfg.grid[0]};
  half.grid[0].pi0 = 0.5;
  const double at_half = run_grid(half)[0].rate;
  bool ok = cells[1].rate >= 0.8 && at_half < 0.8;
  std::string detail = "aksa power";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    detail += " " + fmt("%.3f", cells[i].rate);
    if (i > 0) {
      const double tol = 2.0 * std::hypot(mc_se(cells[i].rate, 500), mc_se(cells[i - 1].rate, 500));
      ok = ok && cells[i].rate <= cells[i - 1].rate + tol;
    }
  }
  detail += "; pi0=0.5: " + fmt("%.3f", at_half);
  return {ok, detail};
}

Outcome tail_dominance() {
  ExperimentConfig cfg;
  auto s = point(ScenarioKind::tail_only, 120, 0.6);
  s.delta = 3.0;
  cfg.grid = {s};
  cfg.methods = {Method::aksa, Method::fisher};
  cfg.replicates = 500;
  cfg.n_perms = 500;
  cfg.master_seed = 2006;
  const auto cells = run_grid(cfg);
  return {cells[0].rate < 0.30 && cells[1].rate >= 0.70, describe(cells[0]) + " " + describe(cells[1])};
}

Outcome spike_gains() {
  ExperimentConfig cfg;
  for (double pi0 : {0.4, 0.6}) {
    auto s = point(ScenarioKind::spike_only, 60, pi0);
    s.delta = 1.0;
    cfg.grid.push_back(s);
  }
  cfg.methods = {Method::aksa, Method::fisher};
  cfg.replicates = 1000;
  cfg.n_perms = 1000;
  cfg.master_seed = 2007;
  const auto cells = run_grid(cfg);
  const double d4 = cell(cells, 0, Method::fisher).rate - cell(cells, 0, Method::aksa).rate;
  const double d6 = cell(cells, 1, Method::fisher).rate - cell(cells, 1, Method::aksa).rate;
  return {d4 >= 0.02 && d6 >= 0.05,
          "fisher-aksa pi0=0.4: " + fmt("%+.3f", d4) + ", pi0=0.6: " + fmt("%+.3f", d6)};
}

Outcome fisher_brown_parity() {
  ExperimentConfig cfg;
  for (double pi0 : {0.3, 0.5}) {
    for (double k : {1.0, 2.0}) {
      auto s = point(ScenarioKind::correlated, 90, pi0);
      s.k_scale = k;
      cfg.grid.push_back(s);
    }
  }
  cfg.methods = {Method::fisher_calibrated, Method::brown_cell};
  cfg.replicates = 500;
  cfg.n_perms = 500;
  cfg.master_seed = 2008;
  const auto summary = fisher_brown_differences(run_grid(cfg));
  bool ok = summary.cells.size() == 4;
  std::string detail = "fisher-brown";
  for (const auto& d : summary.cells) {
    ok = ok && std::abs(d.difference) <= 0.05;
    detail += " " + fmt("%+.3f", d.difference);
  }
  detail += "; mean " + fmt("%+.4f", summary.mean_difference);
  return {ok, detail};
}

Outcome oracle_exactness() {
  std::size_t spike_sets = 0, tail_sets = 0, checked = 0;
  double worst_mc = 0.0;
  bool exact = true;
  for (std::uint64_t seed = 1; checked < 20 && seed < 1000; ++seed) {
    const std::size_t n = 6 + seed % 3;
    const bool spike_case = checked % 2 == 0;
    const std::size_t n_zero = spike_case ? 3 + seed % 2 : seed % 2;
    const auto ds = support::random_dataset(n, n_zero, 900 + seed);
    const SeedSpec mc_seed{3000 + seed, 0};
    double exact_p = 0.0, mc_p = 0.0;
    if (spike_case) {
      if (spike_test(ds, 1, mc_seed).degenerate()) continue;
      const auto ex = support::exhaustive_spike(ds);
      exact = exact && ex.with_trace == ex.exact;
      exact_p = ex.exact;
      mc_p = spike_test(ds, 10000, mc_seed).p_value;
      ++spike_sets;
    } else {
      if (tail_test(ds, 1, mc_seed).degenerate()) continue;
      const auto ex = support::exhaustive_tail(ds);
      exact = exact && ex.with_trace == ex.exact;
      exact_p = ex.exact;
      mc_p = tail_test(ds, 10000, mc_seed).p_value;
      ++tail_sets;
    }
    worst_mc = std::max(worst_mc, std::abs(mc_p - exact_p));
    ++checked;
  }
  return {checked == 20 && exact && worst_mc <= 0.03,
          std::to_string(spike_sets) + " spike + " + std::to_string(tail_sets) +
              " tail datasets, trace==exact: " + (exact ? "yes" : "no") + ", max |MC-exact|=" + fmt("%.4f", worst_mc)};
}

Outcome numerical_kernels() {
  double worst_chi = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double s = 1e-6 * std::pow(50.0 / 1e-6, i / 400.0);
    worst_chi = std::max(worst_chi, std::abs(chi_square_sf(s, 2.0) - std::exp(-s / 2)));
    worst_chi = std::max(worst_chi, std::abs(chi_square_sf(s, 4.0) - std::exp(-s / 2) * (1 + s / 2)));
  }
  // The moment equations c*nu = 4 and 2*c^2*nu = 8(1+rho) hold up to
  // rounding of the division nu = 4 / c.
  double worst_ulps = 0.0;
  bool exact_targets = true;
  for (int i = 0; i <= 1000; ++i) {
    const double rho = i / 1000.0;
    const auto m = theory::brown_moment_match(rho);
    exact_targets = exact_targets && m.mean == 4.0 && m.variance == 8.0 * (1.0 + rho);
    const double eps = std::numeric_limits<double>::epsilon();
    worst_ulps = std::max(worst_ulps, std::abs(m.c * m.nu - m.mean) / (eps * m.mean));
    worst_ulps = std::max(worst_ulps, std::abs(2.0 * m.c * m.c * m.nu - m.variance) / (eps * m.variance));
  }
  bool bitwise = true;
  std::mt19937_64 rng(2010);
  std::uniform_real_distribution<double> u(1e-12, 1.0);
  for (int i = 0; i < 100000 && bitwise; ++i) {
    const double a = u(rng), b = u(rng);
    const auto f = fisher_combine(a, b);
    const auto br = brown_combine(a, b, 0.0);
    bitwise = f.p_value == br.p_value && f.statistic == br.statistic;
  }
  return {worst_chi <= 1e-10 && exact_targets && worst_ulps <= 4.0 && bitwise,
          "max chi2 err=" + fmt("%.2e", worst_chi) + ", moment eqs within " + fmt("%.0f", worst_ulps) +
              " ulp, brown(0)==fisher bitwise: " + (bitwise ? "yes" : "no")};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "twostep_acceptance";
  fs::create_directories(dir);
  std::ofstream(dir / "grid.json") << R"({
    "scenarios": [
      {"kind": "null", "n": 60, "pi0": [0, 0.4]},
      {"kind": "mix", "n": 60, "pi0": 0.3, "delta_a": 0.8, "delta_b": 2}
    ],
    "methods": ["aksa", "spike", "tail", "fisher", "brown"],
    "replicates": 40, "perms": 200
  })";
  auto run = [&](int threads, const fs::path& out) {
    const std::string cmd = std::string("\"") + TWOSTEP_CLI_PATH + "\" simulate --config \"" +
                            (dir / "grid.json").string() + "\" --out \"" + out.string() + "\" --threads " +
                            std::to_string(threads) + " --seed 2011 > /dev/null";
    const int status = std::system(cmd.c_str());
    return status != -1 && WIFEXITED(status) && WEXITSTATUS(status) == 0;
  };
  const auto a = dir / "threads1.csv", b = dir / "threads8.csv";
  fs::remove(a);
  fs::remove(b);
  const bool ran = run(1, a) && run(8, b);
  const auto ba = slurp(a), bb = slurp(b);
  const bool same = ran && !ba.empty() && ba == bb;
  return {same, std::string("exit ok: ") + (ran ? "yes" : "no") + ", " + std::to_string(ba.size()) +
                    " bytes, identical: " + (same ? "yes" : "no")};
}

Outcome skew_robustness() {
  ExperimentConfig cfg;
  for (double pi0 : {0.2, 0.6}) {
    auto s = point(ScenarioKind::null, 90, pi0);
    s.tail = TailDistribution::beta(0.5, 3.0);
    cfg.grid.push_back(s);
  }
  cfg.methods = {Method::aksa, Method::spike, Method::tail, Method::fisher, Method::brown};
  cfg.replicates = 500;
  cfg.n_perms = 500;
  cfg.master_seed = 2012;
  return within_band(run_grid(cfg), 0.025, 0.075);
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "fisher exact under independence", 5.0, fisher_exactness},
      {2, "fisher inflation under dependence", 10.0, fisher_inflation},
      {3, "brown conservative under dependence", 10.0, brown_conservative},
      {4, "global null type I error", kNoLimit, global_null},
      {5, "aksa power anchor", kNoLimit, aksa_power_anchor},
      {6, "tail-only dominance", kNoLimit, tail_dominance},
      {7, "spike-only gains", kNoLimit, spike_gains},
      {8, "fisher-brown power parity", kNoLimit, fisher_brown_parity},
      {9, "oracle exactness", 10.0, oracle_exactness},
      {10, "numerical kernels", 1.0, numerical_kernels},
      {11, "cli determinism across threads", kNoLimit, cli_determinism},
      {12, "skew robustness", kNoLimit, skew_robustness},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %-4s %s: %s [%.2fs%s]\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                in_time ? "" : " over limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
