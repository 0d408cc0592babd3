#include "twostep/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "twostep/errors.hpp"
#include "twostep/stats_kernel.hpp"

namespace twostep {
namespace {

double draw_tail(const TailDistribution& tail, Rng& rng) {
  if (tail.kind == TailDistribution::Kind::uniform01) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double v = 0.0;
    while (v <= 0.0) v = u(rng);
    return v;
  }
  std::gamma_distribution<double> ga(tail.a, 1.0);
  std::gamma_distribution<double> gb(tail.b, 1.0);
  for (;;) {
    const double g1 = ga(rng);
    const double g2 = gb(rng);
    const double v = g1 / (g1 + g2);
    if (v > 0.0 && v < 1.0) return v;
  }
}

void add_spike_effect(std::vector<double>& y, const std::vector<Arm>& t, const std::vector<double>& x,
                      double delta) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (t[i] == 1 && x[i] == 0.0) y[i] += delta;
  }
}

void add_tail_effect(std::vector<double>& y, const std::vector<Arm>& t, const std::vector<double>& x,
                     const std::vector<std::size_t>& rank, double delta) {
  const double n = static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (t[i] == 1 && x[i] > 0.0) y[i] += delta * static_cast<double>(rank[i]) / n;
  }
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::null:
      return "null";
    case ScenarioKind::spike_only:
      return "spike-only";
    case ScenarioKind::tail_only:
      return "tail-only";
    case ScenarioKind::mix:
      return "mix";
    case ScenarioKind::correlated:
      return "correlated";
  }
  return "null";
}

ScenarioKind parse_scenario_kind(const std::string& text) {
  if (text == "null") return ScenarioKind::null;
  if (text == "spike-only" || text == "spike_only") return ScenarioKind::spike_only;
  if (text == "tail-only" || text == "tail_only") return ScenarioKind::tail_only;
  if (text == "mix") return ScenarioKind::mix;
  if (text == "correlated") return ScenarioKind::correlated;
  throw InvalidInput("unknown scenario kind '" + text + "'");
}

std::string to_string(const TailDistribution& tail) {
  if (tail.kind == TailDistribution::Kind::uniform01) return "uniform";
  std::ostringstream os;
  os << "beta " << tail.a << ' ' << tail.b;
  return os.str();
}

TailDistribution parse_tail_distribution(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  in >> name;
  if (name == "uniform") {
    std::string rest;
    if (in >> rest) throw InvalidInput("tail distribution: unexpected text after 'uniform'");
    return TailDistribution::uniform();
  }
  if (name == "beta") {
    double a = 0.0, b = 0.0;
    if (!(in >> a >> b)) throw InvalidInput("tail distribution: expected 'beta <a> <b>'");
    std::string rest;
    if (in >> rest) throw InvalidInput("tail distribution: unexpected text after beta parameters");
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidInput("tail distribution: beta parameters must be > 0");
    return TailDistribution::beta(a, b);
  }
  throw InvalidInput("tail distribution: expected 'uniform' or 'beta <a> <b>', got '" + text + "'");
}

void validate(const ScenarioSpec& spec) {
  if (spec.n < 2) throw InvalidInput("scenario: n must be >= 2");
  if (!(spec.pi0 >= 0.0 && spec.pi0 < 1.0)) throw InvalidInput("scenario: pi0 must lie in [0,1)");
  if (spec.tail.kind == TailDistribution::Kind::beta &&
      (!(spec.tail.a > 0.0) || !(spec.tail.b > 0.0) || !std::isfinite(spec.tail.a) ||
       !std::isfinite(spec.tail.b))) {
    throw InvalidInput("scenario: beta parameters must be finite and > 0");
  }
  switch (spec.kind) {
    case ScenarioKind::null:
      break;
    case ScenarioKind::spike_only:
    case ScenarioKind::tail_only:
      if (!std::isfinite(spec.delta)) throw InvalidInput("scenario: delta must be finite");
      break;
    case ScenarioKind::mix:
      if (!std::isfinite(spec.delta_a) || !std::isfinite(spec.delta_b)) {
        throw InvalidInput("scenario: delta_a and delta_b must be finite");
      }
      break;
    case ScenarioKind::correlated:
      if (!std::isfinite(spec.delta_a) || !std::isfinite(spec.delta_b)) {
        throw InvalidInput("scenario: delta_a and delta_b must be finite");
      }
      if (!(spec.k_scale >= 0.0) || !std::isfinite(spec.k_scale)) {
        throw InvalidInput("scenario: k_scale must be finite and >= 0");
      }
      if (spec.correlated_base == ScenarioKind::correlated) {
        throw InvalidInput("scenario: correlated base pattern must be null, spike-only, tail-only or mix");
      }
      break;
  }
}

std::size_t zero_count(std::size_t n, double pi0) {
  return static_cast<std::size_t>(std::llround(pi0 * static_cast<double>(n)));
}

TrialDataset generate_trial(const ScenarioSpec& spec) {
  validate(spec);
  const std::size_t n = spec.n;
  Rng rng = derive_stream(spec.seed);

  // Zero/positive assignment over subject indices.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_zero = zero_count(n, spec.pi0);
  std::vector<double> x(n, 0.0);
  for (std::size_t i = n_zero; i < n; ++i) x[idx[i]] = draw_tail(spec.tail, rng);

  std::vector<Arm> t(n, 0);
  std::fill_n(t.begin(), (n + 1) / 2, Arm{1});
  std::shuffle(t.begin(), t.end(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(n);
  for (auto& v : y) v = normal(rng);

  // Ascending biomarker ranks over all subjects, ties in random order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<std::size_t> rank(n);
  for (std::size_t p = 0; p < n; ++p) rank[order[p]] = p + 1;

  auto apply = [&](ScenarioKind pattern, double spike_delta, double tail_delta) {
    switch (pattern) {
      case ScenarioKind::spike_only:
        add_spike_effect(y, t, x, spike_delta);
        break;
      case ScenarioKind::tail_only:
        add_tail_effect(y, t, x, rank, tail_delta);
        break;
      case ScenarioKind::mix:
        add_spike_effect(y, t, x, spike_delta);
        add_tail_effect(y, t, x, rank, tail_delta);
        break;
      case ScenarioKind::null:
      case ScenarioKind::correlated:
        break;
    }
  };

  switch (spec.kind) {
    case ScenarioKind::null:
      break;
    case ScenarioKind::spike_only:
    case ScenarioKind::tail_only:
      apply(spec.kind, spec.delta, spec.delta);
      break;
    case ScenarioKind::mix:
      apply(ScenarioKind::mix, spec.delta_a, spec.delta_b);
      break;
    case ScenarioKind::correlated: {
      apply(spec.correlated_base, spec.delta_a, spec.delta_b);
      const double shift = spec.k_scale * std::abs(normal(rng));
      for (std::size_t i = 0; i < n; ++i) {
        if (t[i] == 1) y[i] += shift;
      }
      break;
    }
  }

  return TrialDataset(std::move(y), std::move(t), std::move(x));
}

std::vector<PValuePair> generate_pvalue_pairs(double rho, std::size_t count, const SeedSpec& seed) {
  if (!(std::abs(rho) <= 1.0)) throw DomainError("generate_pvalue_pairs: |rho| must be <= 1");
  Rng rng = derive_stream(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double tail_weight = std::sqrt(1.0 - rho * rho);
  std::vector<PValuePair> pairs;
  pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double z1 = normal(rng);
    const double z2 = rho * z1 + tail_weight * normal(rng);
    pairs.push_back({normal_cdf(z1), normal_cdf(z2)});
  }
  return pairs;
}

}  // namespace twostep
