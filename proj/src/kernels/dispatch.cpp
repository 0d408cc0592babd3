#include <atomic>
#include <cstdlib>
#include <cstring>

#include "twostep/errors.hpp"
#include "twostep/kernels/prefix_ks.hpp"

namespace twostep::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(TWOSTEP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

// -1 means "no override".
std::atomic<int> g_override{-1};

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::avx2:
      return "avx2";
    case Isa::scalar:
      break;
  }
  return "scalar";
}

Isa detected_isa() noexcept {
  static const Isa detected = [] {
    const char* env = std::getenv("TWOSTEP_ISA");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::scalar;
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
  }();
  return detected;
}

Isa active_isa() noexcept {
  const int forced = g_override.load(std::memory_order_relaxed);
  if (forced < 0) return detected_isa();
  const auto isa = static_cast<Isa>(forced);
  if (isa == Isa::avx2 && !cpu_has_avx2()) return Isa::scalar;
  return isa;
}

void set_isa_override(std::optional<Isa> isa) noexcept {
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

double prefix_ks_sum(const PrefixKsArgs& args) {
  if (args.n_prefixes > args.levels.size() || args.arms.size() < args.n_prefixes ||
      args.c1.size() < padded_levels(args.n_levels) || args.c0.size() < padded_levels(args.n_levels)) {
    throw InvalidInput("prefix_ks_sum: inconsistent buffer sizes");
  }
#if defined(TWOSTEP_HAVE_AVX2)
  if (active_isa() == Isa::avx2 && args.levels.size() <= kMaxSubjects) {
    return avx2::prefix_ks_sum(args);
  }
#endif
  return scalar::prefix_ks_sum(args);
}

}  // namespace twostep::kernels
