#include "twostep/dataset.hpp"

#include <cmath>
#include <string>

#include "twostep/errors.hpp"

namespace twostep {

TrialDataset::TrialDataset(std::vector<double> y, std::vector<Arm> t, std::vector<double> x)
    : y_(std::move(y)), t_(std::move(t)), x_(std::move(x)) {
  if (y_.empty()) throw InvalidInput("dataset: no subjects");
  if (t_.size() != y_.size() || x_.size() != y_.size()) {
    throw InvalidInput("dataset: y, t and x must have equal lengths");
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (!std::isfinite(y_[i])) throw InvalidInput("dataset: non-finite outcome at subject " + std::to_string(i));
    if (t_[i] > 1) throw InvalidInput("dataset: arm must be 0 or 1 at subject " + std::to_string(i));
    if (!std::isfinite(x_[i]) || x_[i] < 0.0) {
      throw InvalidInput("dataset: biomarker must be finite and >= 0 at subject " + std::to_string(i));
    }
    (x_[i] == 0.0 ? zero_ : positive_).push_back(i);
    n_treated_ += t_[i];
  }
}

TrialDataset TrialDataset::with_outcomes(std::vector<double> y) const {
  return TrialDataset(std::move(y), t_, x_);
}

double arm_mean_difference(std::span<const double> y, std::span<const Arm> t) {
  double s1 = 0.0, s0 = 0.0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (t[i]) {
      s1 += y[i];
      ++n1;
    } else {
      s0 += y[i];
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) throw InvalidInput("mean difference: an arm is empty");
  return s1 / static_cast<double>(n1) - s0 / static_cast<double>(n0);
}

}  // namespace twostep
