// AVX2/FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after the runtime CPU check in dispatch.cpp. Keep it
// free of inline library templates so no AVX2 code leaks into shared
// instantiations.

#include "pwmopt/kernels.hpp"

#if defined(PWMOPT_HAVE_AVX2_TU)

#include <immintrin.h>

namespace pwmopt::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void gemv_avx2(const double* W, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot_avx2(cols, W + r * cols, x) + bias[r];
}

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_t_avx2(const double* W, std::size_t rows, std::size_t cols, const double* dy,
                 double* dx) {
  for (std::size_t c = 0; c < cols; ++c) dx[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(cols, dy[r], W + r * cols, dx);
}

void ger_avx2(double* dW, std::size_t rows, std::size_t cols, double alpha, const double* dy,
              const double* x) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(cols, alpha * dy[r], x, dW + r * cols);
}

constexpr KernelTable kAvx2{gemv_avx2, gemv_t_avx2, ger_avx2, axpy_avx2, dot_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace pwmopt::kernels

#else

namespace pwmopt::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace pwmopt::kernels

#endif
