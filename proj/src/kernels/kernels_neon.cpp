#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace qbmor::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void gemv_neon(std::size_t rows, std::size_t cols, const double* a,
               std::size_t lda, const double* x, double* y, bool accumulate) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    float64x2_t y0 = accumulate ? vld1q_f64(y + i) : vdupq_n_f64(0.0);
    float64x2_t y1 = accumulate ? vld1q_f64(y + i + 2) : vdupq_n_f64(0.0);
    const double* p = a + i;
    for (std::size_t j = 0; j < cols; ++j, p += lda) {
      const float64x2_t xj = vdupq_n_f64(x[j]);
      y0 = vfmaq_f64(y0, vld1q_f64(p), xj);
      y1 = vfmaq_f64(y1, vld1q_f64(p + 2), xj);
    }
    vst1q_f64(y + i, y0);
    vst1q_f64(y + i + 2, y1);
  }
  for (; i < rows; ++i) {
    double s = accumulate ? y[i] : 0.0;
    const double* p = a + i;
    for (std::size_t j = 0; j < cols; ++j, p += lda) s += *p * x[j];
    y[i] = s;
  }
}

double quadratic_form_neon(std::size_t n, const double* m, std::size_t ldm,
                           const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += x[j] * dot_neon(m + j * ldm, x, n);
  return s;
}

void lincomb_neon(std::size_t n, const double* base, double h,
                  const double* coeffs, const double* const* vecs,
                  std::size_t k, double* out) {
  const float64x2_t vh = vdupq_n_f64(h);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vdupq_n_f64(0.0);
    for (std::size_t j = 0; j < k; ++j) {
      acc = vfmaq_f64(acc, vdupq_n_f64(coeffs[j]), vld1q_f64(vecs[j] + i));
    }
    vst1q_f64(out + i, vfmaq_f64(vld1q_f64(base + i), vh, acc));
  }
  for (; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += coeffs[j] * vecs[j][i];
    out[i] = base[i] + h * acc;
  }
}

}  // namespace

namespace detail {

const KernelTable* neon_table() {
  static const KernelTable t{Isa::kNeon,   dot_neon,           axpy_neon,
                             gemv_neon,    quadratic_form_neon, lincomb_neon};
  return &t;
}

}  // namespace detail
}  // namespace qbmor::kernels
