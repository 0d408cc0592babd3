#include <algorithm>
#include <cstdlib>

#include "twostep/kernels/prefix_ks.hpp"

namespace twostep::kernels::scalar {

double prefix_ks_sum(const PrefixKsArgs& args) {
  const std::size_t m = args.n_levels;
  std::fill_n(args.c1.begin(), m, 0);
  std::fill_n(args.c0.begin(), m, 0);

  std::int64_t n1 = 0, n0 = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < args.n_prefixes; ++k) {
    const auto level = static_cast<std::size_t>(args.levels[k]);
    std::int32_t* c = args.arms[k] ? args.c1.data() : args.c0.data();
    for (std::size_t j = level; j < m; ++j) ++c[j];
    (args.arms[k] ? n1 : n0) += 1;
    if (n1 == 0 || n0 == 0) continue;

    std::int64_t best = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const std::int64_t d = std::int64_t{args.c1[j]} * n0 - std::int64_t{args.c0[j]} * n1;
      best = std::max(best, d < 0 ? -d : d);
    }
    sum += static_cast<double>(best) / (static_cast<double>(n1) * static_cast<double>(n0));
  }
  return sum;
}

}  // namespace twostep::kernels::scalar
