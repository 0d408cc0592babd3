#pragma once

// Monte Carlo experiment runner: design grids x methods -> rejection rates
// with Wilson intervals, Fisher threshold calibration under dependence, and
// the copula size experiment.
//
// Every (design point, replicate) pair owns a derived stream, so results
// are identical for any thread count and the first R replicates of a run
// with 2R replicates reproduce a run with R.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "twostep/perm_engine.hpp"
#include "twostep/simgen.hpp"

namespace twostep {

enum class Method {
  aksa,
  spike,
  tail,
  fisher,
  brown,
  /// Fisher at the correlation-specific threshold calibrated on copula
  /// draws at the cell's measured p_A/p_B correlation.
  fisher_calibrated,
  /// Brown with the cell's measured p_A/p_B correlation.
  brown_cell,
};

std::string to_string(Method m);
/// Accepts the names produced by to_string(Method). Throws InvalidInput.
Method parse_method(const std::string& text);

struct ExperimentConfig {
  std::vector<ScenarioSpec> grid;  // scenario seeds are ignored
  std::vector<Method> methods;
  std::size_t replicates = 1000;
  std::size_t n_perms = 1000;
  double alpha = 0.05;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::uint64_t master_seed = 0;
  std::size_t calibration_draws = 10000;
};

/// Throws InvalidInput on an invalid configuration.
void validate(const ExperimentConfig& config);

/// A replicate or cell failed; the message names the design point.
class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stream of replicate `replicate` at design point `point`.
SeedSpec replicate_seed(std::uint64_t master_seed, std::size_t point, std::size_t replicate) noexcept;

/// p-values of one simulated replicate; NaN for methods that were not run.
struct ReplicateOutcome {
  double p_aksa;
  double p_spike;
  double p_tail;
  double p_fisher;
  double p_brown;
  bool spike_active = false;
  bool tail_active = false;
  double rho_hat = 0.0;
};

ReplicateOutcome run_replicate(const ExperimentConfig& config, std::size_t point, std::size_t replicate);

/// All replicates of one design point, in replicate order.
std::vector<ReplicateOutcome> run_point(const ExperimentConfig& config, std::size_t point);

struct CellResult {
  ScenarioSpec scenario;
  std::size_t point = 0;
  Method method = Method::fisher;
  std::size_t rejections = 0;
  std::size_t replicates = 0;
  double rate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double threshold = 0.05;  // rejection rule is p < threshold
  double rho = 0.0;         // correlation used by *_calibrated / *_cell methods, else NaN
};

/// One CellResult per (design point, method), ordered by point then by the
/// configured method order.
std::vector<CellResult> run_grid(const ExperimentConfig& config);

/// Empirical alpha-quantile of Fisher p-values over `n_draws` copula pairs
/// at correlation `rho`: the adjusted rejection threshold giving size alpha.
double calibrate_fisher_threshold(double rho, std::size_t n_draws, double alpha, const SeedSpec& seed);

struct CopulaRow {
  double rho = 0.0;
  std::size_t draws = 0;
  std::size_t fisher_rejections = 0;
  double fisher_rate = 0.0;
  double fisher_ci_lo = 0.0;
  double fisher_ci_hi = 0.0;
  std::size_t brown_rejections = 0;
  double brown_rate = 0.0;
  double brown_ci_lo = 0.0;
  double brown_ci_hi = 0.0;
  double fisher_threshold = 0.0;
};

/// Size of Fisher and Brown (Brown given the target rho) on copula pairs.
std::vector<CopulaRow> copula_size_experiment(const std::vector<double>& rhos, std::size_t n_draws,
                                              double alpha, const SeedSpec& seed);

struct PowerDifference {
  ScenarioSpec scenario;
  std::size_t point = 0;
  double fisher_rate = 0.0;
  double brown_rate = 0.0;
  double difference = 0.0;  // fisher - brown
};

struct PowerDifferenceSummary {
  std::vector<PowerDifference> cells;
  double mean_difference = 0.0;  // unweighted over cells
};

/// Pairs fisher_calibrated with brown_cell (falling back to fisher/brown)
/// per design point.
PowerDifferenceSummary fisher_brown_differences(const std::vector<CellResult>& cells);

}  // namespace twostep
