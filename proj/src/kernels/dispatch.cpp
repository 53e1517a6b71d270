#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kernels_internal.hpp"

namespace qbmor::kernels {

namespace detail {
#ifndef QBMOR_HAVE_AVX2_TU
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef QBMOR_HAVE_NEON_TU
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* lookup(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_table();
    case Isa::kAvx2:
      return cpu_has_avx2() ? detail::avx2_table() : nullptr;
    case Isa::kNeon:
      // NEON is mandatory on aarch64, so the build flag is the CPU check.
      return detail::neon_table();
  }
  return nullptr;
}

const KernelTable* best_available() {
  if (const auto* t = lookup(Isa::kAvx2)) return t;
  if (const auto* t = lookup(Isa::kNeon)) return t;
  return &scalar_table();
}

const KernelTable* initial_table() {
  const char* env = std::getenv("QBMOR_SIMD");
  if (env == nullptr) return best_available();
  const std::string want(env);
  if (want == "scalar") return &scalar_table();
  if (want == "avx2") {
    if (const auto* t = lookup(Isa::kAvx2)) return t;
  }
  if (want == "neon") {
    if (const auto* t = lookup(Isa::kNeon)) return t;
  }
  return best_available();
}

std::atomic<const KernelTable*>& active() {
  static std::atomic<const KernelTable*> ptr{initial_table()};
  return ptr;
}

const KernelTable& current() { return *active().load(std::memory_order_relaxed); }

}  // namespace

const KernelTable& table(Isa isa) {
  const KernelTable* t = lookup(isa);
  if (t == nullptr) {
    throw std::runtime_error("kernel ISA not available: " + std::string(isa_name(isa)));
  }
  return *t;
}

bool isa_available(Isa isa) { return lookup(isa) != nullptr; }

Isa active_isa() { return current().isa; }

const KernelTable& active_table() { return current(); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

void force_isa(Isa isa) { active().store(&table(isa), std::memory_order_relaxed); }

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
  return current().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  current().axpy(a, x.data(), y.data(), x.size());
}

void gemv(std::size_t rows, std::size_t cols, std::span<const double> a,
          std::span<const double> x, std::span<double> y, bool accumulate) {
  if (a.size() < rows * cols || x.size() != cols || y.size() != rows) {
    throw std::invalid_argument("gemv: dimension mismatch");
  }
  current().gemv(rows, cols, a.data(), rows, x.data(), y.data(), accumulate);
}

double quadratic_form(std::size_t n, std::span<const double> m,
                      std::span<const double> x) {
  if (m.size() < n * n || x.size() != n) {
    throw std::invalid_argument("quadratic_form: dimension mismatch");
  }
  return current().quadratic_form(n, m.data(), n, x.data());
}

void lincomb(std::span<const double> base, double h,
             std::span<const double> coeffs,
             std::span<const double* const> vecs, std::span<double> out) {
  if (coeffs.size() != vecs.size() || base.size() != out.size()) {
    throw std::invalid_argument("lincomb: dimension mismatch");
  }
  current().lincomb(base.size(), base.data(), h, coeffs.data(), vecs.data(),
                    coeffs.size(), out.data());
}

}  // namespace qbmor::kernels
