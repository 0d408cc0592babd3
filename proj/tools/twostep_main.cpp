// twostep: command-line front end.
//
// Exit codes: 0 success, 1 usage or parse error, 2 runtime or infeasibility.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twostep/diagnostics.hpp"
#include "twostep/errors.hpp"
#include "twostep/harness.hpp"
#include "twostep/io.hpp"
#include "twostep/theory.hpp"
#include "twostep/two_step.hpp"

namespace {

using namespace twostep;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw UsageError(message);
}

void emit(const io::ResultsTable& table, const std::optional<std::string>& out) {
  if (out) {
    io::write_results(table, *out);
  } else {
    io::write_csv(table, std::cout);
  }
}

/// "a:b:step" (inclusive) or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw UsageError("bad number '" + s + "' in grid '" + text + "'");
    }
  };
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    require(c2 != std::string::npos, "grid must be start:stop:step, got '" + text + "'");
    const double a = number(text.substr(0, c1));
    const double b = number(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = number(text.substr(c2 + 1));
    require(step > 0 && b >= a, "grid needs step > 0 and stop >= start");
    const auto steps = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= steps; ++i) {
      // Rounding to 12 decimals keeps 0:0.8:0.1 from printing 0.300000000000000004.
      out.push_back(std::round((a + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const auto end = comma == std::string::npos ? text.size() : comma;
      out.push_back(number(text.substr(start, end - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

void check_alpha(double alpha) { require(alpha > 0.0 && alpha < 1.0, "--alpha must lie in (0,1)"); }
void check_positive(std::size_t v, const char* flag) {
  require(v >= 1, std::string(flag) + " must be >= 1");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step permutation tests for zero-inflated predictive biomarkers"};
  app.require_subcommand(1);

  std::string input, out_path, config_path;
  std::optional<std::string> out_opt;
  double alpha = 0.05;
  std::size_t perms = kDefaultPermutations;
  std::size_t boot = kDefaultBootstrap;
  std::size_t min_cell = 5;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> seed_opt;
  std::optional<std::size_t> threads_opt, replicates_opt, perms_opt;
  std::vector<double> rhos;
  std::size_t draws = 10000;
  double delta0 = 0.0, d0 = 0.0, sigma = 1.0;
  std::size_t n = 0;
  std::string pi0_grid = "0:0.8:0.1";

  auto* test = app.add_subcommand("test", "Spike-and-tail two-step test on a y,t,x dataset");
  test->add_option("--input", input, "Dataset CSV (y,t,x)")->required();
  test->add_option("--alpha", alpha, "Level used for the reject flags");
  test->add_option("--perms", perms, "Permutations per component");
  test->add_option("--seed", seed, "Master seed")->required();
  test->add_option("--out", out_opt, "Output CSV (stdout when omitted)");

  auto* diagnose = app.add_subcommand("diagnose", "Post-rejection diagnostics and effect curve");
  diagnose->add_option("--input", input, "Dataset CSV (y,t,x)")->required();
  diagnose->add_option("--perms", perms, "Permutations per test");
  diagnose->add_option("--boot", boot, "Bootstrap resamples for the curve band");
  diagnose->add_option("--seed", seed, "Master seed")->required();
  diagnose->add_option("--out", out_path, "Output CSV")->required();

  auto* cutpoint = app.add_subcommand("cutpoint", "Biomarker threshold selection with permutation p-value");
  cutpoint->add_option("--input", input, "Dataset CSV (y,t,x)")->required();
  cutpoint->add_option("--min-cell", min_cell, "Minimum treated and control subjects per stratum");
  cutpoint->add_option("--perms", perms, "Permutations");
  cutpoint->add_option("--boot", boot, "Bootstrap resamples");
  cutpoint->add_option("--seed", seed, "Master seed")->required();
  cutpoint->add_option("--out", out_path, "Output CSV")->required();

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo size/power grid from a JSON config");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", out_path, "Output CSV")->required();
  simulate->add_option("--threads", threads_opt, "Worker threads (0 = all cores)");
  simulate->add_option("--seed", seed_opt, "Master seed (overrides the config)");
  simulate->add_option("--replicates", replicates_opt, "Replicates per design point (overrides the config)");
  simulate->add_option("--perms", perms_opt, "Permutations per test (overrides the config)");

  auto* copula = app.add_subcommand("copula", "Fisher/Brown size under Gaussian-copula dependence");
  copula->add_option("--rhos", rhos, "Comma-separated correlations")->delimiter(',')->required();
  copula->add_option("--draws", draws, "Draws per correlation");
  copula->add_option("--alpha", alpha, "Level");
  copula->add_option("--seed", seed, "Master seed")->required();
  copula->add_option("--out", out_path, "Output CSV")->required();

  auto* theory_cmd = app.add_subcommand("theory", "Asymptotic AKSA power curve over pi0");
  theory_cmd->add_option("--delta0", delta0, "Average effect without zero inflation")->required();
  theory_cmd->add_option("--d0", d0, "Effect at the spike, D(0)")->required();
  theory_cmd->add_option("--sigma", sigma, "First-order SD of the effect estimator")->required();
  theory_cmd->add_option("--n", n, "Sample size")->required();
  theory_cmd->add_option("--alpha", alpha, "Two-sided level");
  theory_cmd->add_option("--pi0-grid", pi0_grid, "start:stop:step or comma list");
  theory_cmd->add_option("--out", out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  // Stage 1: inputs. Failures here are usage or parse errors.
  std::optional<TrialDataset> ds;
  ExperimentConfig cfg;
  std::vector<double> grid;
  try {
    if (test->parsed() || diagnose->parsed() || cutpoint->parsed()) {
      check_positive(perms, "--perms");
      ds = io::load_dataset(input);
    }
    if (test->parsed() || copula->parsed() || theory_cmd->parsed()) check_alpha(alpha);
    if (diagnose->parsed() || cutpoint->parsed()) check_positive(boot, "--boot");
    if (cutpoint->parsed()) check_positive(min_cell, "--min-cell");
    if (copula->parsed()) {
      check_positive(draws, "--draws");
      for (double r : rhos) require(r >= -1.0 && r <= 1.0, "--rhos values must lie in [-1,1]");
    }
    if (simulate->parsed()) {
      cfg = io::load_experiment_config(config_path);
      if (threads_opt) cfg.threads = *threads_opt;
      if (seed_opt) cfg.master_seed = *seed_opt;
      if (replicates_opt) cfg.replicates = *replicates_opt;
      if (perms_opt) cfg.n_perms = *perms_opt;
      validate(cfg);
    }
    if (theory_cmd->parsed()) {
      grid = parse_grid(pi0_grid);
      require(n >= 1, "--n must be >= 1");
      require(sigma > 0.0 && std::isfinite(sigma), "--sigma must be > 0");
      for (double p : grid) require(p >= 0.0 && p < 1.0, "--pi0-grid values must lie in [0,1)");
    }
  } catch (const std::exception& e) {
    std::cerr << "twostep: " << e.what() << '\n';
    return kUsage;
  }

  // Stage 2: computation.
  try {
    const SeedSpec root{seed, 0};
    if (test->parsed()) {
      const auto r = two_step(*ds, perms, root);
      emit(io::two_step_table(r, alpha), out_opt);
      if (out_opt) {
        std::cout << "p_fisher=" << io::format_double(r.p_fisher) << " p_brown=" << io::format_double(r.p_brown)
                  << '\n';
      }
    } else if (diagnose->parsed()) {
      io::write_results(io::diagnostics_table(twostep::diagnose(*ds, perms, boot, root)), out_path);
    } else if (cutpoint->parsed()) {
      const auto r = select_cutpoint(*ds, min_cell, perms, boot, root);
      io::write_results(io::cutpoint_table(r), out_path);
      std::cout << "tau_hat=" << io::format_double(r.tau_hat) << " p_perm=" << io::format_double(r.p_perm)
                << '\n';
    } else if (simulate->parsed()) {
      const auto cells = run_grid(cfg);
      io::write_results(io::cells_table(cells), out_path);
      const auto diff = fisher_brown_differences(cells);
      if (!diff.cells.empty()) {
        std::cout << "fisher-brown power difference, mean over " << diff.cells.size()
                  << " cells: " << io::format_double(diff.mean_difference) << '\n';
      }
    } else if (copula->parsed()) {
      io::write_results(io::copula_table(copula_size_experiment(rhos, draws, alpha, root)), out_path);
    } else if (theory_cmd->parsed()) {
      const theory::TheoryParams params{delta0, d0, sigma, n, alpha};
      io::write_results(io::theory_table(params, theory::power_curve(params, grid)), out_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "twostep: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
