#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace twostep {

using Arm = std::uint8_t;  // 1 = treatment, 0 = control

/// Per-subject outcome y, arm t and non-negative biomarker x.
///
/// The constructor validates: equal lengths >= 1, finite y, t in {0,1},
/// finite x >= 0. The zero/positive partition (I0, I+) is cached.
class TrialDataset {
 public:
  TrialDataset(std::vector<double> y, std::vector<Arm> t, std::vector<double> x);

  std::size_t size() const noexcept { return y_.size(); }
  std::span<const double> y() const noexcept { return y_; }
  std::span<const Arm> t() const noexcept { return t_; }
  std::span<const double> x() const noexcept { return x_; }

  std::span<const std::size_t> zero_indices() const noexcept { return zero_; }
  std::span<const std::size_t> positive_indices() const noexcept { return positive_; }
  std::size_t n_zero() const noexcept { return zero_.size(); }
  std::size_t n_positive() const noexcept { return positive_.size(); }
  std::size_t n_treated() const noexcept { return n_treated_; }
  std::size_t n_control() const noexcept { return size() - n_treated_; }

  /// Same arms and biomarker with replaced outcomes (validated).
  TrialDataset with_outcomes(std::vector<double> y) const;

 private:
  std::vector<double> y_;
  std::vector<Arm> t_;
  std::vector<double> x_;
  std::vector<std::size_t> zero_;
  std::vector<std::size_t> positive_;
  std::size_t n_treated_ = 0;
};

/// mean(y | t = 1) - mean(y | t = 0). InvalidInput if an arm is empty.
double arm_mean_difference(std::span<const double> y, std::span<const Arm> t);

}  // namespace twostep
