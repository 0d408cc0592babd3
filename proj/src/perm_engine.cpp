#include "twostep/perm_engine.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <string>

#include "twostep/errors.hpp"

namespace twostep {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng derive_stream(const SeedSpec& seed) {
  const std::uint64_t a = mix64(seed.master_seed);
  const std::uint64_t b = mix64(seed.stream_id ^ 0x5bd1e9955bd1e995ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

SeedSpec child_seed(const SeedSpec& seed, std::uint64_t index) noexcept {
  return {seed.master_seed, mix64(seed.stream_id * 0x2545f4914f6cdd1dULL + mix64(index))};
}

double permutation_pvalue(double observed, std::span<const double> permuted) {
  if (permuted.empty()) throw InvalidInput("permutation_pvalue: empty permutation trace");
  const auto hits = std::count_if(permuted.begin(), permuted.end(),
                                  [observed](double v) { return v >= observed; });
  return static_cast<double>(1 + hits) / static_cast<double>(1 + permuted.size());
}

double permutation_pvalue(const PermTrace& trace) {
  return permutation_pvalue(trace.observed, trace.permuted);
}

std::uint64_t LabelArrangements::count_arrangements(std::span<const int> labels) noexcept {
  std::map<int, std::uint64_t> counts;
  for (int l : labels) ++counts[l];

  // Product of binomials C(n_1, n_1) * C(n_1 + n_2, n_2) * ... built
  // incrementally; each partial result is an exact integer.
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  __extension__ using u128 = unsigned __int128;
  u128 total = 1;
  std::uint64_t placed = 0;
  for (const auto& [label, c] : counts) {
    for (std::uint64_t i = 1; i <= c; ++i) {
      ++placed;
      total = total * placed / i;
      if (total > kMax) return kMax;
    }
  }
  return static_cast<std::uint64_t>(total);
}

LabelArrangements::LabelArrangements(std::vector<int> labels, std::uint64_t limit)
    : sorted_(std::move(labels)) {
  std::sort(sorted_.begin(), sorted_.end());
  count_ = count_arrangements(sorted_);
  if (count_ > limit) {
    throw CapacityError("label enumeration has " + std::to_string(count_) +
                            " distinct arrangements, limit is " + std::to_string(limit),
                        count_);
  }
}

std::vector<std::vector<int>> LabelArrangements::materialize() const {
  std::vector<std::vector<int>> out;
  out.reserve(count_);
  for_each([&](std::span<const int> a) { out.emplace_back(a.begin(), a.end()); });
  return out;
}

}  // namespace twostep
