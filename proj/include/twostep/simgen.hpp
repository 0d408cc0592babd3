#pragma once

// Simulated trial generators: global null, spike-only, tail-only and mix
// alternatives, the shared-shift correlated scenario, Beta-skewed tails,
// and the Gaussian-copula p-value pair generator.

#include <cstddef>
#include <string>
#include <vector>

#include "twostep/dataset.hpp"
#include "twostep/perm_engine.hpp"

namespace twostep {

enum class ScenarioKind { null, spike_only, tail_only, mix, correlated };

std::string to_string(ScenarioKind kind);
/// Accepts "null", "spike-only"/"spike_only", "tail-only"/"tail_only", "mix",
/// "correlated". Throws InvalidInput otherwise.
ScenarioKind parse_scenario_kind(const std::string& text);

struct TailDistribution {
  enum class Kind { uniform01, beta };
  Kind kind = Kind::uniform01;
  double a = 1.0;  // Beta shape parameters
  double b = 1.0;

  static TailDistribution uniform() { return {}; }
  static TailDistribution beta(double a, double b) { return {Kind::beta, a, b}; }
};

/// "uniform" or "beta a b".
std::string to_string(const TailDistribution& tail);
TailDistribution parse_tail_distribution(const std::string& text);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::null;
  std::size_t n = 60;
  double pi0 = 0.0;
  TailDistribution tail;
  double delta = 0.0;    // spike-only / tail-only magnitude
  double delta_a = 0.8;  // spike part for mix and correlated
  double delta_b = 2.0;  // tail part for mix and correlated
  double k_scale = 0.0;  // correlated: treated outcomes shifted by k * |z|
  /// Base effect pattern of the correlated scenario (null, spike_only,
  /// tail_only or mix); spike parts use delta_a, tail parts delta_b.
  ScenarioKind correlated_base = ScenarioKind::mix;
  SeedSpec seed;
};

/// Throws InvalidInput when the parameters relevant to `spec.kind` are invalid.
void validate(const ScenarioSpec& spec);

/// round(pi0 * n) subjects at x = 0, the rest drawn from the tail
/// distribution; a shuffled balanced arm vector (ceil(n/2) treated);
/// y ~ N(0,1) plus the scenario's treatment effect.
TrialDataset generate_trial(const ScenarioSpec& spec);

/// Number of zero-biomarker subjects generate_trial produces.
std::size_t zero_count(std::size_t n, double pi0);

struct PValuePair {
  double p_a = 0.5;
  double p_b = 0.5;
};

/// (Phi(z1), Phi(z2)) with (z1, z2) standard bivariate normal, correlation rho.
std::vector<PValuePair> generate_pvalue_pairs(double rho, std::size_t count, const SeedSpec& seed);

}  // namespace twostep
