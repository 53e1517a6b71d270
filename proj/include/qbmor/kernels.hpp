#pragma once

// Dense double-precision inner-loop kernels used on the simulation hot path.
//
// Every kernel exists as a portable scalar reference and as SIMD variants
// (AVX2+FMA on x86-64, NEON on aarch64). The variant is picked once at
// runtime from the CPU feature bits; QBMOR_SIMD=scalar|avx2|neon|auto in the
// environment overrides the choice. Matrices are column-major with a
// leading dimension, which is the Eigen default layout.

#include <cstddef>
#include <span>
#include <string_view>

namespace qbmor::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = A x           (accumulate == false)
  // y = y + A x       (accumulate == true)
  void (*gemv)(std::size_t rows, std::size_t cols, const double* a,
               std::size_t lda, const double* x, double* y, bool accumulate);
  // x^T M x for a square n x n block.
  double (*quadratic_form)(std::size_t n, const double* m, std::size_t ldm,
                           const double* x);
  // out = base + h * sum_i coeffs[i] * vecs[i]
  void (*lincomb)(std::size_t n, const double* base, double h,
                  const double* coeffs, const double* const* vecs,
                  std::size_t k, double* out);
};

const KernelTable& scalar_table();

/// Table for `isa`; throws std::runtime_error when the CPU (or the build)
/// lacks it.
const KernelTable& table(Isa isa);

bool isa_available(Isa isa);
Isa active_isa();
const KernelTable& active_table();
std::string_view isa_name(Isa isa);

/// Pins the dispatch target, mainly for equivalence tests and benchmarks.
void force_isa(Isa isa);

// Convenience wrappers over the active table.

double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void gemv(std::size_t rows, std::size_t cols, std::span<const double> a,
          std::span<const double> x, std::span<double> y,
          bool accumulate = false);
double quadratic_form(std::size_t n, std::span<const double> m,
                      std::span<const double> x);
void lincomb(std::span<const double> base, double h,
             std::span<const double> coeffs,
             std::span<const double* const> vecs, std::span<double> out);

}  // namespace qbmor::kernels
