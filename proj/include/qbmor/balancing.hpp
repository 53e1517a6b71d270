#pragma once

// Balanced truncation of the stabilized quadratic-bilinear system.
//
// The two quadratic Lyapunov equations of the augmented system reduce to
// two linear ones,
//
//   A P + P A^T + B B^T = 0,
//   A^T Q + Q A + S P S + 4 M B B^T M = 0,
//
// plus the scalar p'' = tr((PS)^2) + 4 sum_j b_j^T M P M b_j. The augmented
// Gramians are diag(P, p''/(2 eps)) and diag(Q, 1)/(2 eps); their balancing
// SVD is the SVD of L_Q^T L_P with one extra value sqrt(p''/(2 eps)).

#include <vector>

#include "qbmor/core.hpp"

namespace qbmor {

// ---------------------------------------------------------------------------
// Structured terms of the quadratic Lyapunov equations for block-diagonal
// P~ = diag(P, p'), Q~ = diag(Q, q').

struct Lemma1Terms {
  /// N_j P~ N_j^T = 4 (b_j^T M P M b_j) e_{n+1} e_{n+1}^T; entry j holds the
  /// corner value.
  Vector bilinear_reach_corner;
  /// sum_j N_j^T Q~ N_j = diag(4 q' M B B^T M, 0); the n x n block.
  Matrix bilinear_obs_block;
  /// H (P~ kron P~) H^T = tr((PS)^2) e_{n+1} e_{n+1}^T; the corner value.
  double quadratic_reach_corner = 0.0;
  /// H2 (P~ kron Q~) H2^T = diag(q' S P S, 0); the n x n block.
  Matrix quadratic_obs_block;

  /// The four terms as (n+1) x (n+1) matrices, (i) summed over j.
  Matrix term_i(Index j) const;
  Matrix term_i_sum() const;
  Matrix term_ii() const;
  Matrix term_iii() const;
  Matrix term_iv() const;
};

Lemma1Terms lemma1_terms(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p,
                         double q_prime);

/// Left-hand side of the reachability equation at P~ = diag(P, p').
Matrix reachability_residual(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p,
                             double p_prime);

/// Left-hand side of the observability equation at P~ = diag(P, *),
/// Q~ = diag(Q, q').
Matrix observability_residual(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p,
                              const Eigen::Ref<const Matrix>& q, double q_prime);

/// p'' from a dense P. Values in [-1e-12 * scale, 0) are clipped to 0;
/// anything more negative throws NumericalError.
double compute_p_doubleprime(const Eigen::Ref<const Matrix>& p, const Eigen::Ref<const Matrix>& s,
                             const Eigen::Ref<const Matrix>& m, const Eigen::Ref<const Matrix>& b);

/// p'' for P = Z Z^T without forming P: |Z^T S Z|_F^2 + 4 |Z^T M B|_F^2.
double compute_p_doubleprime_factored(const Eigen::Ref<const Matrix>& z,
                                      const Eigen::Ref<const Matrix>& s,
                                      const Eigen::Ref<const Matrix>& m,
                                      const Eigen::Ref<const Matrix>& b);

struct AugmentedGramians {
  Matrix P;  // (n+1) x (n+1)
  Matrix Q;  // (n+1) x (n+1)
};

/// P~ = diag(P, p''/(2 eps)), Q~ = diag(Q, 1)/(2 eps). eps = 0 has no
/// solution and throws PreconditionError.
AugmentedGramians assemble_gramians(const QuadraticBilinearSystem& qb,
                                    const Eigen::Ref<const Matrix>& p,
                                    const Eigen::Ref<const Matrix>& q, double p_doubleprime);

/// L with L L^T = G up to tol_rank * |G|_F and full column rank, from a
/// symmetric eigen-decomposition; columns ordered by decreasing norm.
/// Nonpositive eigenvalues are always dropped, so tol_rank = 0 keeps every
/// positive one. G = 0 gives an n x 0 factor. Throws NumericalError if G
/// has an eigenvalue below -max(tol_rank, 1e-12) * |G|_2.
Matrix symmetric_factor(const Eigen::Ref<const Matrix>& g, double tol_rank = 0.0);

// ---------------------------------------------------------------------------

/// SVD of L_Q^T L_P, shared by every truncation rank of a sweep.
struct SquareRootSvd {
  Matrix L_P;
  Matrix L_Q;
  Vector sigma;  // descending
  Matrix U;      // k_Q x k
  Matrix V;      // k_P x k
  Index numerical_rank = 0;
};

SquareRootSvd square_root_svd(const Eigen::Ref<const Matrix>& l_p,
                              const Eigen::Ref<const Matrix>& l_q);

struct BalancedTruncation {
  Vector sigma;  // singular values of L_Q^T L_P, ascending
  double p_doubleprime = 0.0;
  double epsilon = 0.0;
  Index r = 0;
  Matrix T_l;  // (n+1) x r
  Matrix T_r;  // (n+1) x r

  /// sqrt(p''/(2 eps)), the augmented singular value before the common
  /// 1/sqrt(2 eps) factor.
  double augmented_sigma() const;
};

/// Singular values of the augmented system,
/// (sigma_1, ..., sigma_k, sqrt(p''/(2 eps))) / sqrt(2 eps), descending.
Vector qb_singular_values(const Eigen::Ref<const Vector>& sigma, double p_doubleprime,
                          double epsilon);

/// Truncation to r states: the augmented direction plus the r - 1 dominant
/// singular directions. Requires 2 <= r <= n + 1, eps > 0, p'' > 0 and
/// sqrt(p''/(2 eps)) above the r-th largest sigma. When r - 1 exceeds the
/// numerical rank of the SVD, the remaining directions complete the pair
/// biorthogonally (r = n + 1 is then a similarity transformation).
BalancedTruncation balance(const SquareRootSvd& svd, double p_doubleprime, double epsilon, Index r);

BalancedTruncation balance(const Eigen::Ref<const Matrix>& l_p, const Eigen::Ref<const Matrix>& l_q,
                           double p_doubleprime, double epsilon, Index r);

/// Smallest r whose discarded sigma tail sum is at most `fraction` of the
/// total. Advisory only: no error bound backs it.
Index suggest_rank(const Eigen::Ref<const Vector>& sigma_ascending, double fraction);

// ---------------------------------------------------------------------------

/// Reduced quadratic-bilinear model
///
///   xs' = A* xs + B* u
///   xr' = -eps_rom xr + sum_j u_j (N*_j . xs) + xs^T S* xs
///   y   = p''^(1/4) xr
///
/// with state (xs, xr) of length r. xs is the balanced state rescaled by
/// (2 eps)^(1/4), which makes every matrix independent of eps.
struct ReducedModel {
  Matrix A_star;  // (r-1) x (r-1)
  Matrix B_star;  // (r-1) x n_in
  Matrix N_star;  // n_in x (r-1), row j is N*_j
  Matrix S_star;  // (r-1) x (r-1), symmetric
  double p_doubleprime = 0.0;
  double epsilon_rom = 0.0;
  Vector x0;  // length r

  /// Projection pair actually used (W^T V = I): x~ ~= V x, x = W^T x~.
  Matrix W;
  Matrix V;

  Index r() const { return A_star.rows() + 1; }
  Index n_in() const { return B_star.cols(); }
  double output_scale() const;
  double output(const Eigen::Ref<const Vector>& x) const;
  ReducedModel with_initial_state(Vector x0) const;
};

ReducedModel reduce(const QuadraticBilinearSystem& qb, const BalancedTruncation& bt,
                    double epsilon_rom = 0.0);

/// A linear system with quadratic output reproducing the reduced model in
/// the autonomous case (u == 0): y_rom = output_scale * x^T M* x, where
/// A*^T M* + M* A* = S*. With inputs the two models differ.
struct RecoveredLinear {
  LtiQuadraticSystem system;
  double output_scale;
};

RecoveredLinear reduced_linear_recovery(const ReducedModel& rom);

// ---------------------------------------------------------------------------
// Square-root balanced truncation of the linear system with linear outputs
// z = C x, used as the reference method. The reduced output matrix is
// T_r^T M T_r so the reduced model is again a linear system with quadratic
// output.

struct LinearTruncation {
  Matrix T_l;  // n x r
  Matrix T_r;  // n x r
};

/// 1 <= r <= n; completed like balance() beyond the numerical rank.
LinearTruncation linear_balance(const SquareRootSvd& svd, Index r);

LtiQuadraticSystem reduce_linear(const LtiQuadraticSystem& fom, const LinearTruncation& lt);

}  // namespace qbmor
