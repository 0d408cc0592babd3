#pragma once

// Prefix Kolmogorov-Smirnov kernel.
//
// Subjects arrive in biomarker order with their outcome given as a dense
// 0-based level (rank among distinct outcome values) and an arm in {0,1}.
// For every prefix k = 1..n_prefixes the kernel evaluates the two-sample KS
// distance between treated and control outcomes in the prefix and returns
// the sum of those distances (0 for a one-arm prefix).
//
// Cumulative counts c_t[j] = #{arm t, level <= j} are kept as int32 and the
// distance at prefix k is max_j |c1[j]*n0 - c0[j]*n1| / (n1*n0). The max is
// an exact integer, so every variant returns a bit-identical sum.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace twostep::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// Best variant supported by the build and the running CPU. The environment
/// variable TWOSTEP_ISA=scalar forces the reference path.
Isa detected_isa() noexcept;

/// Variant used by prefix_ks_sum(); detected_isa() unless overridden.
Isa active_isa() noexcept;

/// Override the dispatched variant (nullopt restores detection). Requesting
/// a variant the CPU lacks falls back to scalar. Not thread-safe against
/// concurrent kernel calls; intended for tests and benchmarks.
void set_isa_override(std::optional<Isa> isa) noexcept;

/// Largest subject count for which the int32 products cannot overflow.
inline constexpr std::size_t kMaxSubjects = 46340;

/// Levels rounded up to the SIMD width; scratch buffers must hold this many.
inline constexpr std::size_t padded_levels(std::size_t n_levels) noexcept {
  return (n_levels + 7) / 8 * 8;
}

struct PrefixKsArgs {
  std::span<const std::int32_t> levels;  // outcome level per ordered subject
  std::span<const std::uint8_t> arms;    // arm per ordered subject
  std::size_t n_levels = 0;              // number of distinct levels
  std::size_t n_prefixes = 0;            // prefixes 1..n_prefixes, <= levels.size()
  std::span<std::int32_t> c1;            // scratch, >= padded_levels(n_levels)
  std::span<std::int32_t> c0;            // scratch, >= padded_levels(n_levels)
};

/// Dispatched entry point.
double prefix_ks_sum(const PrefixKsArgs& args);

namespace scalar {
double prefix_ks_sum(const PrefixKsArgs& args);
}

#if defined(TWOSTEP_HAVE_AVX2)
namespace avx2 {
double prefix_ks_sum(const PrefixKsArgs& args);
}
#endif

}  // namespace twostep::kernels
