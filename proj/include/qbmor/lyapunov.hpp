#pragma once

// Linear Lyapunov equations  A G + G A^T + F = 0.
//
// Dense route: real Schur form of A followed by block back-substitution
// (Bartels-Stewart). Low-rank route: the real-arithmetic formulation of the
// low-rank ADI iteration, with conjugate shift pairs processed jointly, for
// F = Z_F Z_F^T with few columns.

#include <complex>
#include <iosfwd>
#include <vector>

#include "qbmor/core.hpp"

namespace qbmor {

/// Relative residual |A G + G A^T + F|_F / |F|_F (absolute when F = 0).
double lyapunov_residual(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& g,
                         const Eigen::Ref<const Matrix>& f);

/// Solves A G + G A^T + F = 0 for symmetric F. The result is symmetrized.
/// Throws InstabilityError if A has an eigenvalue with Re >= 0 and
/// NumericalError if the Sylvester operator is numerically singular.
Matrix solve_lyapunov_dense(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& f);

/// Sets eigenvalues in [-tol * |G|_2, 0) to zero. Throws NumericalError if
/// an eigenvalue lies below that band.
Matrix clip_to_psd(const Eigen::Ref<const Matrix>& g, double tol = 1e-12);

// ---------------------------------------------------------------------------

struct ShiftSet {
  /// Re < 0 for every entry; complex shifts are followed by their conjugate.
  std::vector<std::complex<double>> shifts;

  /// Throws PreconditionError when the invariants above do not hold.
  void validate() const;
  std::size_t size() const { return shifts.size(); }
};

struct ShiftOptions {
  int num_shifts = 16;
  int num_ritz_large = 20;   // Ritz values kept from the Arnoldi process on A
  int num_ritz_small = 20;   // kept from the Arnoldi process on A^{-1}
  int arnoldi_steps_large = 40;
  int arnoldi_steps_small = 20;
};

/// Heuristic ADI shifts: Ritz values of A and reciprocal Ritz values of
/// A^{-1}, restricted to the open left half-plane, then picked greedily to
/// shrink max_t prod_p |(t - p) / (t + conj(p))| over the Ritz set. Falls
/// back to {-l_min, -sqrt(l_min l_max), -l_max} magnitude proxies when the
/// Arnoldi processes yield no usable candidates.
ShiftSet compute_shifts(const Eigen::Ref<const Matrix>& a, const ShiftOptions& opts = {});

/// ADI rational function max over `points` of prod_p |(t - p)/(t + conj p)|.
double adi_minmax_objective(const std::vector<std::complex<double>>& points,
                            const std::vector<std::complex<double>>& shifts);

// ---------------------------------------------------------------------------

enum class GramianKind { kReachability, kObservability };

struct GramianFactor {
  Matrix Z;  // G ~= Z Z^T
  GramianKind kind = GramianKind::kReachability;
  /// Relative residual |W_j W_j^T|_2 / |Z_F Z_F^T|_2 at exit.
  double residual_norm = 0.0;
  /// One entry per ADI step (a complex pair counts as two steps and records
  /// the same value twice).
  std::vector<double> residual_history;
};

struct AdiOptions {
  int max_iter = 50;
  /// Stop once the relative residual drops to tol; tol <= 0 runs exactly
  /// max_iter steps.
  double tol = 1e-8;
  GramianKind kind = GramianKind::kReachability;
};

/// Low-rank ADI for A G + G A^T + Z_F Z_F^T = 0. Shifts are used cyclically.
/// After j steps Z has j * k_F columns. A complex pair always completes, so
/// a pair started at step max_iter - 1 yields one extra block.
GramianFactor solve_lyapunov_adi(const Eigen::Ref<const Matrix>& a,
                                 const Eigen::Ref<const Matrix>& z_f, const ShiftSet& shifts,
                                 const AdiOptions& opts = {});

/// Writes `iter,residual` rows, iter starting at 1.
void write_residual_csv(std::ostream& out, const GramianFactor& factor);

// ---------------------------------------------------------------------------

/// Factor of S P S + 4 M B B^T M built from a factor of P:
/// (S Z_P[:, 0:k_p_prime], 2 M B), n x (k_p_prime + n_in).
Matrix observability_rhs_factor(const Eigen::Ref<const Matrix>& s,
                                const Eigen::Ref<const Matrix>& z_p,
                                const Eigen::Ref<const Matrix>& m,
                                const Eigen::Ref<const Matrix>& b, Index k_p_prime);

/// Rank-revealing column compression: thin QR, then SVD of R truncated so
/// that |Z' Z'^T - Z Z^T|_F <= tol_rank |Z Z^T|_F. Columns of the result are
/// ordered by decreasing norm.
Matrix compress_factor(const Eigen::Ref<const Matrix>& z, double tol_rank);

}  // namespace qbmor
