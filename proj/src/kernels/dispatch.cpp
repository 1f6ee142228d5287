#include "lssid/kernels.hpp"

#include "kernels_impl.hpp"

#include <cstdlib>
#include <cstring>

namespace lssid::kernels {

namespace {

constexpr KernelTable kScalar{Isa::Scalar, "scalar", detail::dot_scalar, detail::masked_dot_scalar,
                              detail::squared_distance_scalar};

#if defined(LSSID_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, "avx2", detail::dot_avx2, detail::masked_dot_avx2,
                            detail::squared_distance_avx2};
#endif

bool cpu_has_avx2() noexcept {
#if defined(LSSID_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  const char* env = std::getenv("LSSID_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return kScalar;
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(LSSID_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

std::string_view active_name() noexcept { return active().name; }

}  // namespace lssid::kernels
