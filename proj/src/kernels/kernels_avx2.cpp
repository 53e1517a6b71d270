// Compiled with -mavx2 -mfma. Keep standard-library calls out of this file so
// no AVX2-encoded copy of an inline std function can leak into other objects.

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace qbmor::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

// Row panels of 16 stay in four registers while the columns stream past.
void gemv_avx2(std::size_t rows, std::size_t cols, const double* a,
               std::size_t lda, const double* x, double* y, bool accumulate) {
  std::size_t i = 0;
  for (; i + 16 <= rows; i += 16) {
    __m256d y0, y1, y2, y3;
    if (accumulate) {
      y0 = _mm256_loadu_pd(y + i);
      y1 = _mm256_loadu_pd(y + i + 4);
      y2 = _mm256_loadu_pd(y + i + 8);
      y3 = _mm256_loadu_pd(y + i + 12);
    } else {
      y0 = y1 = y2 = y3 = _mm256_setzero_pd();
    }
    const double* p = a + i;
    for (std::size_t j = 0; j < cols; ++j, p += lda) {
      const __m256d xj = _mm256_broadcast_sd(x + j);
      y0 = _mm256_fmadd_pd(_mm256_loadu_pd(p), xj, y0);
      y1 = _mm256_fmadd_pd(_mm256_loadu_pd(p + 4), xj, y1);
      y2 = _mm256_fmadd_pd(_mm256_loadu_pd(p + 8), xj, y2);
      y3 = _mm256_fmadd_pd(_mm256_loadu_pd(p + 12), xj, y3);
    }
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
    _mm256_storeu_pd(y + i + 8, y2);
    _mm256_storeu_pd(y + i + 12, y3);
  }
  for (; i + 4 <= rows; i += 4) {
    __m256d y0 = accumulate ? _mm256_loadu_pd(y + i) : _mm256_setzero_pd();
    const double* p = a + i;
    for (std::size_t j = 0; j < cols; ++j, p += lda) {
      y0 = _mm256_fmadd_pd(_mm256_loadu_pd(p), _mm256_broadcast_sd(x + j), y0);
    }
    _mm256_storeu_pd(y + i, y0);
  }
  for (; i < rows; ++i) {
    double s = accumulate ? y[i] : 0.0;
    const double* p = a + i;
    for (std::size_t j = 0; j < cols; ++j, p += lda) s += *p * x[j];
    y[i] = s;
  }
}

double quadratic_form_avx2(std::size_t n, const double* m, std::size_t ldm,
                           const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += x[j] * dot_avx2(m + j * ldm, x, n);
  return s;
}

void lincomb_avx2(std::size_t n, const double* base, double h,
                  const double* coeffs, const double* const* vecs,
                  std::size_t k, double* out) {
  const __m256d vh = _mm256_set1_pd(h);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(coeffs[j]), _mm256_loadu_pd(vecs[j] + i), acc);
    }
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vh, acc, _mm256_loadu_pd(base + i)));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += coeffs[j] * vecs[j][i];
    out[i] = base[i] + h * acc;
  }
}

}  // namespace

namespace detail {

const KernelTable* avx2_table() {
  static const KernelTable t{Isa::kAvx2,   dot_avx2,           axpy_avx2,
                             gemv_avx2,    quadratic_form_avx2, lincomb_avx2};
  return &t;
}

}  // namespace detail
}  // namespace qbmor::kernels
