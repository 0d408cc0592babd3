#pragma once

// CSV dataset loader, tidy CSV result tables and the JSON experiment config.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "twostep/dataset.hpp"
#include "twostep/diagnostics.hpp"
#include "twostep/harness.hpp"
#include "twostep/theory.hpp"
#include "twostep/two_step.hpp"

namespace twostep::io {

/// Reads a `y,t,x` CSV. Throws ParseError carrying the 1-based line number
/// of the offending row (0 for a missing or unreadable file).
TrialDataset load_dataset(const std::filesystem::path& path);
TrialDataset parse_dataset(std::istream& in);

using Cell = std::variant<std::string, double, long long>;

struct ResultsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const;  // throws InvalidInput
};

/// "%.9g"; nan and +/-inf spelled nan, inf, -inf.
std::string format_double(double v);

/// Fixed column order, one row per line, '\n' terminated. Fields containing
/// a comma or quote are quoted.
void write_csv(const ResultsTable& table, std::ostream& out);
/// Throws std::runtime_error when the file cannot be written.
void write_results(const ResultsTable& table, const std::filesystem::path& path);

/// Parses a file written by write_results. Every cell comes back as a
/// string; use as_double / as_integer to read numbers.
ResultsTable read_results(const std::filesystem::path& path);
ResultsTable parse_results(std::istream& in);
double as_double(const Cell& cell);
long long as_integer(const Cell& cell);

ResultsTable cells_table(const std::vector<CellResult>& cells);
ResultsTable power_difference_table(const PowerDifferenceSummary& summary);
ResultsTable two_step_table(const TwoStepResult& result, double alpha);
/// Long format: quantity, x, estimate, lo, hi.
ResultsTable diagnostics_table(const DiagnosticsReport& report);
ResultsTable cutpoint_table(const CutpointResult& result);
ResultsTable copula_table(const std::vector<CopulaRow>& rows);
ResultsTable theory_table(const theory::TheoryParams& params,
                          const std::vector<theory::PowerCurvePoint>& curve);

/// JSON experiment config:
///
///   {
///     "scenarios": [
///       {"kind": "tail-only", "n": [60, 120], "pi0": [0, 0.4], "delta": 3,
///        "tail": "beta 0.5 3"}
///     ],
///     "methods": ["aksa", "fisher", "brown"],
///     "replicates": 500, "perms": 500, "alpha": 0.05,
///     "threads": 0, "seed": 1, "calibration_draws": 10000
///   }
///
/// Scenario fields n, pi0, delta, delta_a, delta_b, k, tail and base take a
/// value or a list; each scenario entry expands to the full factorial
/// product in that field order (last field varying fastest). Throws
/// ParseError with a line number where one is known.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace twostep::io
