#include "twostep/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "twostep/errors.hpp"

namespace twostep::io {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      out.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote", line_no);
  out.push_back(was_quoted ? field : trim(field));
  return out;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void row_error(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what, line_no);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q.push_back('"');
    q.push_back(ch);
  }
  q.push_back('"');
  return q;
}

std::string render(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return quote_if_needed(*s);
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::to_string(std::get<long long>(cell));
}

long long count(std::size_t v) { return static_cast<long long>(v); }

}  // namespace

TrialDataset parse_dataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("dataset: empty file (expected header y,t,x)", 1);
  ++line_no;
  const auto header = split_csv_line(line, line_no);
  if (header != std::vector<std::string>{"y", "t", "x"}) {
    row_error(line_no, "expected header 'y,t,x', got '" + trim(line) + "'");
  }

  std::vector<double> y;
  std::vector<Arm> t;
  std::vector<double> x;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != 3) {
      row_error(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    double yv = 0.0, tv = 0.0, xv = 0.0;
    if (!parse_number(fields[0], yv) || !std::isfinite(yv)) row_error(line_no, "y is not a finite number");
    if (!parse_number(fields[1], tv) || (tv != 0.0 && tv != 1.0)) {
      row_error(line_no, "t must be 0 or 1, got '" + fields[1] + "'");
    }
    if (!parse_number(fields[2], xv) || !std::isfinite(xv)) row_error(line_no, "x is not a finite number");
    if (xv < 0.0) row_error(line_no, "x must be >= 0, got " + fields[2]);
    y.push_back(yv);
    t.push_back(static_cast<Arm>(tv));
    x.push_back(xv);
  }
  if (y.empty()) throw ParseError("dataset: no data rows", line_no);
  try {
    return TrialDataset(std::move(y), std::move(t), std::move(x));
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("dataset: ") + e.what(), 0);
  }
}

TrialDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset '" + path.string() + "'", 0);
  try {
    return parse_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

std::size_t ResultsTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw InvalidInput("results table has no column '" + name + "'");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_csv(const ResultsTable& table, std::ostream& out) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out << ',';
    out << quote_if_needed(table.columns[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw InvalidInput("results row width does not match header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << render(row[i]);
    }
    out << '\n';
  }
}

void write_results(const ResultsTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(table, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

ResultsTable parse_results(std::istream& in) {
  ResultsTable table;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("results: missing header", 1);
  ++line_no;
  table.columns = split_csv_line(line, line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != table.columns.size()) row_error(line_no, "row width does not match header");
    table.rows.emplace_back(fields.begin(), fields.end());
  }
  return table;
}

ResultsTable read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open results '" + path.string() + "'", 0);
  return parse_results(in);
}

double as_double(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  if (const auto* i = std::get_if<long long>(&cell)) return static_cast<double>(*i);
  const auto& s = std::get<std::string>(cell);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  if (!parse_number(s, v)) throw ParseError("not a number: '" + s + "'");
  return v;
}

long long as_integer(const Cell& cell) {
  if (const auto* i = std::get_if<long long>(&cell)) return *i;
  if (const auto* d = std::get_if<double>(&cell)) return static_cast<long long>(*d);
  const auto& s = std::get<std::string>(cell);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("not an integer: '" + s + "'");
  return v;
}

ResultsTable cells_table(const std::vector<CellResult>& cells) {
  ResultsTable t;
  t.columns = {"point", "scenario", "n",      "pi0",        "tail",       "delta", "delta_a",
               "delta_b", "k",      "base",   "method",     "rejections", "replicates",
               "rate",  "ci_lo",    "ci_hi",  "threshold",  "rho"};
  for (const auto& c : cells) {
    const auto& s = c.scenario;
    t.rows.push_back({count(c.point), to_string(s.kind), count(s.n), s.pi0, to_string(s.tail), s.delta,
                      s.delta_a, s.delta_b, s.k_scale, to_string(s.correlated_base), to_string(c.method),
                      count(c.rejections), count(c.replicates), c.rate, c.ci_lo, c.ci_hi, c.threshold,
                      c.rho});
  }
  return t;
}

ResultsTable power_difference_table(const PowerDifferenceSummary& summary) {
  ResultsTable t;
  t.columns = {"point", "scenario", "n", "pi0", "k", "fisher_rate", "brown_rate", "difference"};
  for (const auto& d : summary.cells) {
    t.rows.push_back({count(d.point), to_string(d.scenario.kind), count(d.scenario.n), d.scenario.pi0,
                      d.scenario.k_scale, d.fisher_rate, d.brown_rate, d.difference});
  }
  return t;
}

ResultsTable two_step_table(const TwoStepResult& r, double alpha) {
  ResultsTable t;
  t.columns = {"quantity", "value"};
  auto add = [&](const char* name, Cell v) { t.rows.push_back({std::string(name), std::move(v)}); };
  add("spike_statistic", r.spike.statistic);
  add("p_a", r.spike.p_value);
  add("spike_status", r.spike.degenerate() ? r.spike.degenerate_reason : std::string("ok"));
  add("tail_statistic", r.tail.statistic);
  add("p_b", r.tail.p_value);
  add("tail_status", r.tail.degenerate() ? r.tail.degenerate_reason : std::string("ok"));
  add("active_components", static_cast<long long>(r.active_components));
  add("s_fisher", r.s_fisher);
  add("p_fisher", r.p_fisher);
  add("rho_hat", r.rho_hat);
  add("c", r.c);
  add("nu", r.nu);
  add("s_brown", r.s_brown);
  add("p_brown", r.p_brown);
  add("n_perms", count(std::max(r.spike.n_perms, r.tail.n_perms)));
  add("alpha", alpha);
  add("reject_fisher", static_cast<long long>(r.p_fisher < alpha));
  add("reject_brown", static_cast<long long>(r.p_brown < alpha));
  return t;
}

ResultsTable diagnostics_table(const DiagnosticsReport& rep) {
  ResultsTable t;
  t.columns = {"quantity", "x", "estimate", "lo", "hi"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto scalar = [&](const char* name, double v) { t.rows.push_back({std::string(name), nan, v, nan, nan}); };
  scalar("p_a", rep.primary.spike.p_value);
  scalar("p_b", rep.primary.tail.p_value);
  scalar("p_fisher", rep.primary.p_fisher);
  scalar("p_brown", rep.primary.p_brown);
  scalar("rho_hat", rep.primary.rho_hat);
  scalar("p_main", rep.main_effect.p_value);
  scalar("delta_main_hat", rep.delta_main_hat);
  scalar("p_interaction_only_fisher", rep.interaction_only.p_fisher);
  scalar("p_interaction_only_brown", rep.interaction_only.p_brown);
  scalar("bandwidth", rep.curve.bandwidth);
  if (rep.curve.spike_effect) {
    const auto& s = *rep.curve.spike_effect;
    t.rows.push_back({std::string("spike_effect"), 0.0, s.value, s.lo, s.hi});
  }
  for (const auto& p : rep.curve.points) {
    t.rows.push_back({std::string("effect_curve"), p.x, p.effect, p.band_lo, p.band_hi});
  }
  return t;
}

ResultsTable cutpoint_table(const CutpointResult& r) {
  ResultsTable t;
  t.columns = {"quantity", "estimate", "lo", "hi"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  t.rows.push_back({std::string("tau_hat"), r.tau_hat, r.tau_ci.lo, r.tau_ci.hi});
  t.rows.push_back({std::string("c_hat"), r.c_hat, nan, nan});
  t.rows.push_back({std::string("p_perm"), r.p_perm, nan, nan});
  t.rows.push_back({std::string("delta_le"), r.delta_le.value, r.delta_le.lo, r.delta_le.hi});
  t.rows.push_back({std::string("delta_gt"), r.delta_gt.value, r.delta_gt.lo, r.delta_gt.hi});
  t.rows.push_back({std::string("n_candidates"), static_cast<double>(r.n_candidates), nan, nan});
  t.rows.push_back({std::string("n_perms"), static_cast<double>(r.n_perms), nan, nan});
  t.rows.push_back({std::string("n_boot_used"), static_cast<double>(r.n_boot_used), nan, nan});
  return t;
}

ResultsTable copula_table(const std::vector<CopulaRow>& rows) {
  ResultsTable t;
  t.columns = {"rho",           "draws",        "fisher_rejections", "fisher_rate", "fisher_ci_lo",
               "fisher_ci_hi",  "brown_rejections", "brown_rate",    "brown_ci_lo", "brown_ci_hi",
               "fisher_threshold"};
  for (const auto& r : rows) {
    t.rows.push_back({r.rho, count(r.draws), count(r.fisher_rejections), r.fisher_rate, r.fisher_ci_lo,
                      r.fisher_ci_hi, count(r.brown_rejections), r.brown_rate, r.brown_ci_lo, r.brown_ci_hi,
                      r.fisher_threshold});
  }
  return t;
}

ResultsTable theory_table(const theory::TheoryParams& params, const std::vector<theory::PowerCurvePoint>& curve) {
  ResultsTable t;
  t.columns = {"pi0", "delta0", "d0", "sigma", "n", "alpha", "average_effect", "lambda", "power"};
  for (const auto& p : curve) {
    t.rows.push_back({p.pi0, params.delta0, params.d_at_zero, params.sigma, count(params.n), params.alpha,
                      p.average_effect, p.lambda, p.power});
  }
  return t;
}

namespace {

using nlohmann::json;

std::vector<json> as_list(const json& v) {
  if (v.is_array()) {
    if (v.empty()) throw ParseError("config: empty list");
    return std::vector<json>(v.begin(), v.end());
  }
  return {v};
}

double json_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ParseError("config: '" + key + "' must be a number");
  return v.get<double>();
}

std::size_t json_count(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ParseError("config: '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::vector<ScenarioSpec> expand_scenario(const json& entry) {
  if (!entry.is_object()) throw ParseError("config: each scenario must be an object");
  static const std::vector<std::string> kKeys = {"kind", "n", "pi0", "delta", "delta_a",
                                                 "delta_b", "k", "tail", "base"};
  for (const auto& [key, _] : entry.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ParseError("config: unknown scenario key '" + key + "'");
    }
  }
  if (!entry.contains("kind") || !entry["kind"].is_string()) {
    throw ParseError("config: scenario needs a string 'kind'");
  }
  ScenarioSpec base;
  try {
    base.kind = parse_scenario_kind(entry["kind"].get<std::string>());
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  auto values = [&](const char* key) -> std::vector<json> {
    if (!entry.contains(key)) return {json()};
    return as_list(entry[key]);
  };

  std::vector<ScenarioSpec> out;
  for (const auto& n : values("n"))
    for (const auto& pi0 : values("pi0"))
      for (const auto& delta : values("delta"))
        for (const auto& da : values("delta_a"))
          for (const auto& db : values("delta_b"))
            for (const auto& k : values("k"))
              for (const auto& tail : values("tail"))
                for (const auto& b : values("base")) {
                  ScenarioSpec s = base;
                  if (!n.is_null()) s.n = json_count(n, "n");
                  if (!pi0.is_null()) s.pi0 = json_real(pi0, "pi0");
                  if (!delta.is_null()) s.delta = json_real(delta, "delta");
                  if (!da.is_null()) s.delta_a = json_real(da, "delta_a");
                  if (!db.is_null()) s.delta_b = json_real(db, "delta_b");
                  if (!k.is_null()) s.k_scale = json_real(k, "k");
                  try {
                    if (!tail.is_null()) {
                      if (!tail.is_string()) throw ParseError("config: 'tail' must be a string");
                      s.tail = parse_tail_distribution(tail.get<std::string>());
                    }
                    if (!b.is_null()) {
                      if (!b.is_string()) throw ParseError("config: 'base' must be a string");
                      s.correlated_base = parse_scenario_kind(b.get<std::string>());
                    }
                    validate(s);
                  } catch (const InvalidInput& e) {
                    throw ParseError(std::string("config: ") + e.what());
                  }
                  out.push_back(s);
                }
  return out;
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  const auto end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("config line " + std::to_string(line) + ": " + e.what(), line);
  }
  if (!doc.is_object()) throw ParseError("config: top level must be an object");

  static const std::vector<std::string> kKeys = {"scenarios", "methods", "replicates", "perms",
                                                 "alpha",     "threads", "seed",       "calibration_draws"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw ParseError("config: unknown key '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  if (!doc.contains("scenarios") || !doc["scenarios"].is_array() || doc["scenarios"].empty()) {
    throw ParseError("config: 'scenarios' must be a nonempty list");
  }
  for (const auto& entry : doc["scenarios"]) {
    auto specs = expand_scenario(entry);
    cfg.grid.insert(cfg.grid.end(), specs.begin(), specs.end());
  }

  if (doc.contains("methods")) {
    for (const auto& m : as_list(doc["methods"])) {
      if (!m.is_string()) throw ParseError("config: methods must be strings");
      try {
        cfg.methods.push_back(parse_method(m.get<std::string>()));
      } catch (const InvalidInput& e) {
        throw ParseError(std::string("config: ") + e.what());
      }
    }
  } else {
    cfg.methods = {Method::aksa, Method::fisher, Method::brown};
  }
  if (doc.contains("replicates")) cfg.replicates = json_count(doc["replicates"], "replicates");
  if (doc.contains("perms")) cfg.n_perms = json_count(doc["perms"], "perms");
  if (doc.contains("alpha")) cfg.alpha = json_real(doc["alpha"], "alpha");
  if (doc.contains("threads")) cfg.threads = json_count(doc["threads"], "threads");
  if (doc.contains("seed")) {
    const auto& s = doc["seed"];
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0)) {
      throw ParseError("config: 'seed' must be an unsigned 64-bit integer");
    }
    cfg.master_seed = s.get<std::uint64_t>();
  }
  if (doc.contains("calibration_draws")) {
    cfg.calibration_draws = json_count(doc["calibration_draws"], "calibration_draws");
  }
  try {
    validate(cfg);
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'", 0);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_experiment_config(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace twostep::io
