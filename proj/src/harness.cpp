#include "twostep/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "parallel.hpp"
#include "twostep/errors.hpp"
#include "twostep/stats_kernel.hpp"
#include "twostep/two_step.hpp"

namespace twostep {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool wants(const ExperimentConfig& c, Method m) {
  return std::find(c.methods.begin(), c.methods.end(), m) != c.methods.end();
}

bool wants_two_step(const ExperimentConfig& c) {
  return wants(c, Method::spike) || wants(c, Method::tail) || wants(c, Method::fisher) ||
         wants(c, Method::brown) || wants(c, Method::fisher_calibrated) || wants(c, Method::brown_cell);
}

std::string describe_point(const ExperimentConfig& c, std::size_t point) {
  const auto& s = c.grid[point];
  return "design point " + std::to_string(point) + " (" + to_string(s.kind) + ", n=" + std::to_string(s.n) +
         ", pi0=" + std::to_string(s.pi0) + ")";
}

// Spearman correlation of the component p-values across replicates in
// which both components ran, clamped to [0,1].
double cell_component_correlation(const std::vector<ReplicateOutcome>& reps) {
  std::vector<double> a, b;
  for (const auto& r : reps) {
    if (r.spike_active && r.tail_active) {
      a.push_back(r.p_spike);
      b.push_back(r.p_tail);
    }
  }
  if (a.size() < 2) return 0.0;
  try {
    return std::clamp(spearman_rho(a, b), 0.0, 1.0);
  } catch (const UndefinedCorrelation&) {
    return 0.0;
  }
}

CellResult make_cell(const ExperimentConfig& c, std::size_t point, Method m, std::size_t rejections,
                     double threshold, double rho) {
  CellResult cell;
  cell.scenario = c.grid[point];
  cell.point = point;
  cell.method = m;
  cell.rejections = rejections;
  cell.replicates = c.replicates;
  cell.rate = static_cast<double>(rejections) / static_cast<double>(c.replicates);
  const auto ci = wilson_ci(rejections, c.replicates, 0.95);
  cell.ci_lo = ci.lo;
  cell.ci_hi = ci.hi;
  cell.threshold = threshold;
  cell.rho = rho;
  return cell;
}

std::vector<CellResult> summarize_point(const ExperimentConfig& c, std::size_t point,
                                        const std::vector<ReplicateOutcome>& reps) {
  double rho_cell = kNaN;
  double fisher_threshold = kNaN;
  if (wants(c, Method::fisher_calibrated) || wants(c, Method::brown_cell)) {
    rho_cell = cell_component_correlation(reps);
    if (wants(c, Method::fisher_calibrated)) {
      fisher_threshold = calibrate_fisher_threshold(rho_cell, c.calibration_draws, c.alpha,
                                                    child_seed({c.master_seed, 1}, point));
    }
  }

  std::vector<CellResult> out;
  for (Method m : c.methods) {
    std::size_t rejections = 0;
    double threshold = c.alpha;
    double rho = kNaN;
    for (const auto& r : reps) {
      bool reject = false;
      switch (m) {
        case Method::aksa:
          reject = r.p_aksa < c.alpha;
          break;
        case Method::spike:
          reject = r.p_spike < c.alpha;
          break;
        case Method::tail:
          reject = r.p_tail < c.alpha;
          break;
        case Method::fisher:
          reject = r.p_fisher < c.alpha;
          break;
        case Method::brown:
          reject = r.p_brown < c.alpha;
          break;
        case Method::fisher_calibrated:
          // The calibrated cut applies to the two-component statistic only.
          reject = r.p_fisher < ((r.spike_active && r.tail_active) ? fisher_threshold : c.alpha);
          break;
        case Method::brown_cell: {
          double p = r.p_fisher;
          if (r.spike_active && r.tail_active) p = brown_combine(r.p_spike, r.p_tail, rho_cell).p_value;
          reject = p < c.alpha;
          break;
        }
      }
      rejections += reject ? 1 : 0;
    }
    if (m == Method::fisher_calibrated) {
      threshold = fisher_threshold;
      rho = rho_cell;
    } else if (m == Method::brown_cell) {
      rho = rho_cell;
    }
    out.push_back(make_cell(c, point, m, rejections, threshold, rho));
  }
  return out;
}

[[noreturn]] void rethrow_first(const std::vector<std::exception_ptr>& errors, const std::string& context) {
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw HarnessError(context + std::to_string(i) + ": " + e.what());
    }
  }
  throw HarnessError(context + "unknown failure");
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::aksa:
      return "aksa";
    case Method::spike:
      return "spike";
    case Method::tail:
      return "tail";
    case Method::fisher:
      return "fisher";
    case Method::brown:
      return "brown";
    case Method::fisher_calibrated:
      return "fisher_calibrated";
    case Method::brown_cell:
      return "brown_cell";
  }
  return "fisher";
}

Method parse_method(const std::string& text) {
  for (Method m : {Method::aksa, Method::spike, Method::tail, Method::fisher, Method::brown,
                   Method::fisher_calibrated, Method::brown_cell}) {
    if (to_string(m) == text) return m;
  }
  throw InvalidInput("unknown method '" + text + "'");
}

void validate(const ExperimentConfig& config) {
  if (config.grid.empty()) throw InvalidInput("experiment: grid is empty");
  if (config.methods.empty()) throw InvalidInput("experiment: no methods requested");
  if (config.replicates == 0) throw InvalidInput("experiment: replicates must be >= 1");
  if (config.n_perms == 0) throw InvalidInput("experiment: permutations must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw InvalidInput("experiment: alpha must lie in (0,1)");
  if (wants(config, Method::fisher_calibrated) && config.calibration_draws < 1000) {
    throw InvalidInput("experiment: calibration_draws must be >= 1000");
  }
  for (const auto& spec : config.grid) {
    validate(spec);
    if (wants(config, Method::aksa) && spec.n < 5) throw InvalidInput("experiment: aksa needs n >= 5");
  }
}

SeedSpec replicate_seed(std::uint64_t master_seed, std::size_t point, std::size_t replicate) noexcept {
  return child_seed(child_seed({master_seed, 0}, point), replicate);
}

ReplicateOutcome run_replicate(const ExperimentConfig& config, std::size_t point, std::size_t replicate) {
  const SeedSpec rep = replicate_seed(config.master_seed, point, replicate);
  ScenarioSpec spec = config.grid.at(point);
  spec.seed = child_seed(rep, 0);
  const TrialDataset ds = generate_trial(spec);

  ReplicateOutcome out{kNaN, kNaN, kNaN, kNaN, kNaN};
  if (wants_two_step(config)) {
    const auto r = two_step(ds, config.n_perms, child_seed(rep, 1));
    out.p_spike = r.spike.p_value;
    out.p_tail = r.tail.p_value;
    out.p_fisher = r.p_fisher;
    out.p_brown = r.p_brown;
    out.spike_active = !r.spike.degenerate();
    out.tail_active = !r.tail.degenerate();
    out.rho_hat = r.rho_hat;
  }
  if (wants(config, Method::aksa)) {
    out.p_aksa = aksa_test(ds, config.n_perms, child_seed(rep, 2)).p_value;
  }
  return out;
}

std::vector<ReplicateOutcome> run_point(const ExperimentConfig& config, std::size_t point) {
  validate(config);
  std::vector<ReplicateOutcome> reps(config.replicates);
  const auto errors = detail::parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    reps[r] = run_replicate(config, point, r);
  });
  if (std::any_of(errors.begin(), errors.end(), [](const auto& e) { return e != nullptr; })) {
    rethrow_first(errors, describe_point(config, point) + ", replicate ");
  }
  return reps;
}

std::vector<CellResult> run_grid(const ExperimentConfig& config) {
  validate(config);
  const std::size_t n_points = config.grid.size();
  const std::size_t n_jobs = n_points * config.replicates;

  std::vector<ReplicateOutcome> reps(n_jobs);
  const auto errors = detail::parallel_for(n_jobs, config.threads, [&](std::size_t job) {
    const std::size_t point = job / config.replicates;
    const std::size_t r = job % config.replicates;
    reps[job] = run_replicate(config, point, r);
  });
  for (std::size_t job = 0; job < n_jobs; ++job) {
    if (!errors[job]) continue;
    const std::size_t point = job / config.replicates;
    try {
      std::rethrow_exception(errors[job]);
    } catch (const std::exception& e) {
      throw HarnessError(describe_point(config, point) + ", replicate " +
                         std::to_string(job % config.replicates) + ": " + e.what());
    }
  }

  std::vector<CellResult> cells;
  for (std::size_t point = 0; point < n_points; ++point) {
    const auto first = reps.begin() + static_cast<std::ptrdiff_t>(point * config.replicates);
    const std::vector<ReplicateOutcome> slice(first, first + static_cast<std::ptrdiff_t>(config.replicates));
    auto point_cells = summarize_point(config, point, slice);
    cells.insert(cells.end(), point_cells.begin(), point_cells.end());
  }
  return cells;
}

double calibrate_fisher_threshold(double rho, std::size_t n_draws, double alpha, const SeedSpec& seed) {
  if (n_draws < 1000) throw InvalidInput("calibrate_fisher_threshold: n_draws must be >= 1000");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("calibrate_fisher_threshold: alpha must lie in (0,1)");
  const auto pairs = generate_pvalue_pairs(rho, n_draws, seed);
  std::vector<double> p;
  p.reserve(pairs.size());
  for (const auto& pr : pairs) p.push_back(fisher_combine(pr.p_a, pr.p_b).p_value);
  std::sort(p.begin(), p.end());
  // Rejecting p < p[k] rejects at most k = floor(alpha * n) of the draws.
  const auto k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(p.size())));
  return p[std::min(k, p.size() - 1)];
}

std::vector<CopulaRow> copula_size_experiment(const std::vector<double>& rhos, std::size_t n_draws,
                                              double alpha, const SeedSpec& seed) {
  if (n_draws == 0) throw InvalidInput("copula_size_experiment: n_draws must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("copula_size_experiment: alpha must lie in (0,1)");
  std::vector<CopulaRow> rows;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const double rho = rhos[i];
    const SeedSpec stream = child_seed(seed, i);
    const auto pairs = generate_pvalue_pairs(rho, n_draws, child_seed(stream, 0));

    CopulaRow row;
    row.rho = rho;
    row.draws = n_draws;
    for (const auto& pr : pairs) {
      row.fisher_rejections += fisher_combine(pr.p_a, pr.p_b).p_value < alpha ? 1 : 0;
      row.brown_rejections += brown_combine(pr.p_a, pr.p_b, rho).p_value < alpha ? 1 : 0;
    }
    const double n = static_cast<double>(n_draws);
    row.fisher_rate = static_cast<double>(row.fisher_rejections) / n;
    row.brown_rate = static_cast<double>(row.brown_rejections) / n;
    const auto fci = wilson_ci(row.fisher_rejections, n_draws);
    const auto bci = wilson_ci(row.brown_rejections, n_draws);
    row.fisher_ci_lo = fci.lo;
    row.fisher_ci_hi = fci.hi;
    row.brown_ci_lo = bci.lo;
    row.brown_ci_hi = bci.hi;
    if (n_draws >= 1000) {
      row.fisher_threshold = calibrate_fisher_threshold(rho, n_draws, alpha, child_seed(stream, 1));
    } else {
      row.fisher_threshold = kNaN;
    }
    rows.push_back(row);
  }
  return rows;
}

PowerDifferenceSummary fisher_brown_differences(const std::vector<CellResult>& cells) {
  std::map<std::size_t, const CellResult*> fisher, brown;
  for (const auto& c : cells) {
    if (c.method == Method::fisher_calibrated || (c.method == Method::fisher && !fisher.count(c.point))) {
      fisher[c.point] = &c;
    }
    if (c.method == Method::brown_cell || (c.method == Method::brown && !brown.count(c.point))) {
      brown[c.point] = &c;
    }
  }
  PowerDifferenceSummary summary;
  double total = 0.0;
  for (const auto& [point, f] : fisher) {
    const auto it = brown.find(point);
    if (it == brown.end()) continue;
    PowerDifference d;
    d.scenario = f->scenario;
    d.point = point;
    d.fisher_rate = f->rate;
    d.brown_rate = it->second->rate;
    d.difference = d.fisher_rate - d.brown_rate;
    total += d.difference;
    summary.cells.push_back(d);
  }
  if (!summary.cells.empty()) summary.mean_difference = total / static_cast<double>(summary.cells.size());
  return summary;
}

}  // namespace twostep
