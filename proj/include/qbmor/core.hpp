#pragma once

// Domain types for linear time-invariant systems with a quadratic output
//
//   x' = A x + B u,   y = x^T M x,   x(0) = x0,
//
// and for the augmented quadratic-bilinear system that carries y as an
// extra state. All types are immutable after construction.

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace qbmor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Returns (T + T^T) / 2. Throws DimensionError for non-square input.
Matrix symmetrize(const Eigen::Ref<const Matrix>& t);

/// Spectral abscissa max Re(lambda(A)). Reporting only; the caller decides
/// whether the value is acceptable. Throws NumericalError if the eigenvalue
/// iteration does not converge, DimensionError if A is not square.
double validate_stability(const Eigen::Ref<const Matrix>& a);

/// x^T M x.
double eval_quadratic_output(const Eigen::Ref<const Vector>& x,
                             const Eigen::Ref<const Matrix>& m);

enum class StabilityCheck {
  kVerify,        // full eigen-decomposition, limited to kMaxVerifiedDimension
  kAssumeStable,  // caller vouches for stability
};

inline constexpr Index kMaxVerifiedDimension = 2000;

class LtiQuadraticSystem {
 public:
  /// M is replaced by its symmetric part. Throws DimensionError on shape
  /// mismatch, InstabilityError when max Re(lambda(A)) >= 0, and
  /// PreconditionError for n > kMaxVerifiedDimension under kVerify.
  LtiQuadraticSystem(Matrix a, Matrix b, Matrix m, Vector x0,
                     StabilityCheck check = StabilityCheck::kVerify);

  /// Zero initial state.
  LtiQuadraticSystem(Matrix a, Matrix b, Matrix m,
                     StabilityCheck check = StabilityCheck::kVerify);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& M() const { return m_; }
  const Vector& x0() const { return x0_; }
  Index n() const { return a_.rows(); }
  Index n_in() const { return b_.cols(); }

  /// NaN when constructed with kAssumeStable.
  double spectral_abscissa() const { return spectral_abscissa_; }

  double output(const Eigen::Ref<const Vector>& x) const {
    return eval_quadratic_output(x, m_);
  }

  /// Same system with a different initial state.
  LtiQuadraticSystem with_initial_state(Vector x0) const;

 private:
  LtiQuadraticSystem() = default;

  Matrix a_;
  Matrix b_;
  Matrix m_;
  Vector x0_;
  double spectral_abscissa_ = 0.0;
};

/// The system with augmented state (x, y):
///
///   x' = A x + B u
///   y' = -eps y + sum_j u_j (2 b_j^T M) x + x^T S x,     S = A^T M + M A.
///
/// The quadratic coefficient matrix H of the augmented system is never
/// stored; only its nonzero block S is. Row j of `bilinear_rows()` is the
/// only nonzero row of N_j.
class QuadraticBilinearSystem {
 public:
  QuadraticBilinearSystem(Matrix a_core, double epsilon, Matrix b, Matrix bilinear_rows,
                          Matrix s, Vector x0_aug);

  const Matrix& A_core() const { return a_core_; }
  double epsilon() const { return epsilon_; }
  const Matrix& B_core() const { return b_; }
  const Matrix& bilinear_rows() const { return n_rows_; }
  const Matrix& S() const { return s_; }
  const Vector& x0_aug() const { return x0_aug_; }

  Index n() const { return a_core_.rows(); }
  Index dim() const { return a_core_.rows() + 1; }
  Index n_in() const { return b_.cols(); }
  /// Zero-based index of the output state.
  Index output_index() const { return a_core_.rows(); }

  /// block-diag(A, -eps), (n+1) x (n+1).
  Matrix A_aug() const;
  /// (B; 0), (n+1) x n_in.
  Matrix B_aug() const;
  /// Full (n+1) x (n+1) matrix N_j.
  Matrix N(Index j) const;

  /// Copy with a different stabilization parameter.
  QuadraticBilinearSystem with_epsilon(double epsilon) const;

  /// dx = A(eps) x + B u + sum_j u_j N_j x + H (x kron x).
  void rhs(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
           Eigen::Ref<Vector> dx) const;

 private:
  Matrix a_core_;
  double epsilon_;
  Matrix b_;
  Matrix n_rows_;
  Matrix s_;
  Vector x0_aug_;
};

/// Linear system with the two output blocks z+ = L+^T x and z- = L-^T x,
/// where M = L+ L+^T - L- L-^T, so y = |z+|^2 - |z-|^2.
class MimoLinearSystem {
 public:
  MimoLinearSystem(Matrix a, Matrix b, Matrix l_plus, Matrix l_minus, Vector x0);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& L_plus() const { return l_plus_; }
  const Matrix& L_minus() const { return l_minus_; }
  const Vector& x0() const { return x0_; }
  Index n() const { return a_.rows(); }
  Index n_in() const { return b_.cols(); }
  Index num_outputs() const { return l_plus_.cols() + l_minus_.cols(); }

  /// Stacked output (z+; z-).
  Vector outputs(const Eigen::Ref<const Vector>& x) const;
  /// |z+|^2 - |z-|^2 for a stacked output vector.
  double recombine(const Eigen::Ref<const Vector>& z) const;
  /// (L+ L-) stacked column-wise: the C^T of the linear output.
  Matrix output_factor() const;

 private:
  Matrix a_;
  Matrix b_;
  Matrix l_plus_;
  Matrix l_minus_;
  Vector x0_;
};

}  // namespace qbmor
