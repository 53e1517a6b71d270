#include "qbmor/kernels.hpp"

namespace qbmor::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemv_scalar(std::size_t rows, std::size_t cols, const double* a,
                 std::size_t lda, const double* x, double* y, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    const double xj = x[j];
    const double* col = a + j * lda;
    for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * xj;
  }
}

double quadratic_form_scalar(std::size_t n, const double* m, std::size_t ldm,
                             const double* x) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    s += x[j] * dot_scalar(m + j * ldm, x, n);
  }
  return s;
}

void lincomb_scalar(std::size_t n, const double* base, double h,
                    const double* coeffs, const double* const* vecs,
                    std::size_t k, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += coeffs[j] * vecs[j][i];
    out[i] = base[i] + h * acc;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::kScalar,   dot_scalar,          axpy_scalar,
                             gemv_scalar,    quadratic_form_scalar, lincomb_scalar};
  return t;
}

}  // namespace qbmor::kernels
