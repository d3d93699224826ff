#pragma once

// Inner-loop arithmetic over descriptor rows. Each instruction set provides
// the same table of kernels; one table is picked at startup from the CPU
// features and the TOPOLOOP_KERNELS environment variable (scalar|avx2|neon).

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace topoloop::simd {

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // out[r] = <query, rows[r*n .. r*n+n)> for r in [0, count)
  void (*dot_rows)(const double* query, const double* rows, std::size_t count,
                   std::size_t n, double* out);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

// Tables compiled in and supported by the running CPU, scalar first.
std::vector<const KernelTable*> available_kernels();

// Kernel table used by the library. Resolved once.
const KernelTable& active_kernels();

const KernelTable* find_kernels(std::string_view name);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active_kernels().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active_kernels().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

namespace detail {
#if defined(TOPOLOOP_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif
#if defined(TOPOLOOP_HAVE_NEON)
const KernelTable& neon_kernels() noexcept;
#endif
}  // namespace detail

}  // namespace topoloop::simd
