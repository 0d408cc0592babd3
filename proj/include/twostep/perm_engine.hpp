#pragma once

// Reproducible random streams, the add-one permutation p-value, and an
// exhaustive enumerator of distinct label arrangements for exactness checks.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace twostep {

/// Identifies one random stream. The generator state is a pure function of
/// (master_seed, stream_id), so results never depend on thread count or
/// call order.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stream for `seed`.
Rng derive_stream(const SeedSpec& seed);

/// Deterministic sub-stream `index` of `seed`; children of distinct indices
/// (and of distinct parents) are distinct streams.
SeedSpec child_seed(const SeedSpec& seed, std::uint64_t index) noexcept;

struct PermTrace {
  double observed = 0.0;
  std::vector<double> permuted;

  std::size_t n_perms() const noexcept { return permuted.size(); }
};

/// (1 + #{b : permuted[b] >= observed}) / (1 + B). Never 0.
/// Throws InvalidInput when `permuted` is empty.
double permutation_pvalue(double observed, std::span<const double> permuted);
double permutation_pvalue(const PermTrace& trace);

/// All distinct arrangements of a multiset of labels, in lexicographic order.
class LabelArrangements {
 public:
  /// Throws CapacityError (carrying the exact count) when the number of
  /// distinct arrangements exceeds `limit`.
  LabelArrangements(std::vector<int> labels, std::uint64_t limit);

  /// Multinomial coefficient N! / prod(count_l!), saturated at UINT64_MAX.
  static std::uint64_t count_arrangements(std::span<const int> labels) noexcept;

  std::uint64_t size() const noexcept { return count_; }

  /// Calls fn(std::span<const int>) once per distinct arrangement.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::vector<int> current = sorted_;
    do {
      fn(std::span<const int>(current));
    } while (std::next_permutation(current.begin(), current.end()));
  }

  std::vector<std::vector<int>> materialize() const;

 private:
  std::vector<int> sorted_;
  std::uint64_t count_ = 0;
};

}  // namespace twostep
