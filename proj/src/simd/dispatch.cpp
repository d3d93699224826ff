#include <cstdlib>
#include <string>

#include "topoloop/simd/kernels.hpp"

namespace topoloop::simd {
namespace {

bool cpu_has_avx2() {
#if defined(TOPOLOOP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& resolve() {
  const auto tables = available_kernels();
  if (const char* forced = std::getenv("TOPOLOOP_KERNELS"); forced != nullptr && *forced) {
    for (const KernelTable* t : tables) {
      if (std::string(t->name) == forced) return *t;
    }
    // Unknown or unsupported request: stay on the portable path.
    return scalar_kernels();
  }
  return *tables.back();
}

}  // namespace

std::vector<const KernelTable*> available_kernels() {
  std::vector<const KernelTable*> out{&scalar_kernels()};
#if defined(TOPOLOOP_HAVE_AVX2)
  if (cpu_has_avx2()) out.push_back(&detail::avx2_kernels());
#endif
#if defined(TOPOLOOP_HAVE_NEON)
  out.push_back(&detail::neon_kernels());
#endif
  return out;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = resolve();
  return table;
}

const KernelTable* find_kernels(std::string_view name) {
  for (const KernelTable* t : available_kernels()) {
    if (name == t->name) return t;
  }
  return nullptr;
}

}  // namespace topoloop::simd
