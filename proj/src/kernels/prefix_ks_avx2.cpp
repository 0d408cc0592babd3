#include <immintrin.h>

#include <algorithm>

#include "twostep/kernels/prefix_ks.hpp"

namespace twostep::kernels::avx2 {
namespace {

inline std::int32_t hmax_epi32(__m256i v) {
  __m128i m = _mm_max_epi32(_mm256_castsi256_si128(v), _mm256_extracti128_si256(v, 1));
  m = _mm_max_epi32(m, _mm_shuffle_epi32(m, _MM_SHUFFLE(1, 0, 3, 2)));
  m = _mm_max_epi32(m, _mm_shuffle_epi32(m, _MM_SHUFFLE(2, 3, 0, 1)));
  return _mm_cvtsi128_si32(m);
}

// Adds 1 to target[j] for every j >= level. Padding lanes are incremented
// as well; they then always hold the arm totals and contribute |n1*n0 - n0*n1| = 0.
inline void suffix_increment(std::int32_t* target, std::size_t padded, std::int32_t level) {
  const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256i threshold = _mm256_set1_epi32(level - 1);
  for (std::size_t b = 0; b < padded; b += 8) {
    const __m256i idx = _mm256_add_epi32(lane, _mm256_set1_epi32(static_cast<std::int32_t>(b)));
    const __m256i mask = _mm256_cmpgt_epi32(idx, threshold);
    auto* p = reinterpret_cast<__m256i*>(target + b);
    _mm256_storeu_si256(p, _mm256_sub_epi32(_mm256_loadu_si256(p), mask));
  }
}

// Fused increment of `inc` and max |c1*w1 - c0*w0| over all levels.
template <bool kTreated>
inline std::int32_t update_and_max(std::int32_t* c1, std::int32_t* c0, std::size_t padded,
                                   std::int32_t level, std::int32_t w1, std::int32_t w0) {
  const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256i threshold = _mm256_set1_epi32(level - 1);
  const __m256i vw1 = _mm256_set1_epi32(w1);
  const __m256i vw0 = _mm256_set1_epi32(w0);
  __m256i best = _mm256_setzero_si256();
  for (std::size_t b = 0; b < padded; b += 8) {
    const __m256i idx = _mm256_add_epi32(lane, _mm256_set1_epi32(static_cast<std::int32_t>(b)));
    const __m256i mask = _mm256_cmpgt_epi32(idx, threshold);
    auto* p1 = reinterpret_cast<__m256i*>(c1 + b);
    auto* p0 = reinterpret_cast<__m256i*>(c0 + b);
    __m256i v1 = _mm256_loadu_si256(p1);
    __m256i v0 = _mm256_loadu_si256(p0);
    if constexpr (kTreated) {
      v1 = _mm256_sub_epi32(v1, mask);
      _mm256_storeu_si256(p1, v1);
    } else {
      v0 = _mm256_sub_epi32(v0, mask);
      _mm256_storeu_si256(p0, v0);
    }
    const __m256i d = _mm256_sub_epi32(_mm256_mullo_epi32(v1, vw1), _mm256_mullo_epi32(v0, vw0));
    best = _mm256_max_epi32(best, _mm256_abs_epi32(d));
  }
  return hmax_epi32(best);
}

}  // namespace

double prefix_ks_sum(const PrefixKsArgs& args) {
  const std::size_t padded = padded_levels(args.n_levels);
  std::int32_t* c1 = args.c1.data();
  std::int32_t* c0 = args.c0.data();
  std::fill_n(c1, padded, 0);
  std::fill_n(c0, padded, 0);

  std::int32_t n1 = 0, n0 = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < args.n_prefixes; ++k) {
    const std::int32_t level = args.levels[k];
    const bool treated = args.arms[k] != 0;
    (treated ? n1 : n0) += 1;
    if (n1 == 0 || n0 == 0) {
      suffix_increment(treated ? c1 : c0, padded, level);
      continue;
    }
    const std::int32_t best = treated ? update_and_max<true>(c1, c0, padded, level, n0, n1)
                                      : update_and_max<false>(c1, c0, padded, level, n0, n1);
    sum += static_cast<double>(best) / (static_cast<double>(n1) * static_cast<double>(n0));
  }
  return sum;
}

}  // namespace twostep::kernels::avx2
