#include "topoloop/simd/kernels.hpp"

namespace topoloop::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void dot_rows_scalar(const double* query, const double* rows, std::size_t count,
                     std::size_t n, double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot_scalar(query, rows + r * n, n);
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar", dot_scalar, squared_distance_scalar,
                                 dot_rows_scalar, axpy_scalar};
  return table;
}

}  // namespace topoloop::simd
