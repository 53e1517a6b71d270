#include "qbmor/core.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qbmor/errors.hpp"
#include "qbmor/kernels.hpp"

namespace qbmor {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

}  // namespace

Matrix symmetrize(const Eigen::Ref<const Matrix>& t) {
  if (t.rows() != t.cols()) {
    throw DimensionError("symmetrize: matrix must be square, got " +
                         std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
  }
  Matrix s = 0.5 * (t + t.transpose());
  return s;
}

double validate_stability(const Eigen::Ref<const Matrix>& a) {
  if (a.rows() != a.cols()) throw DimensionError("validate_stability: A must be square");
  if (a.rows() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("validate_stability: eigenvalue iteration did not converge");
  }
  return es.eigenvalues().real().maxCoeff();
}

double eval_quadratic_output(const Eigen::Ref<const Vector>& x,
                             const Eigen::Ref<const Matrix>& m) {
  if (m.rows() != m.cols() || m.rows() != x.size()) {
    throw DimensionError("eval_quadratic_output: x has length " + std::to_string(x.size()) +
                         " but M is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
  return kernels::active_table().quadratic_form(sz(x.size()), m.data(), sz(m.outerStride()),
                                                x.data());
}

// ---------------------------------------------------------------------------

LtiQuadraticSystem::LtiQuadraticSystem(Matrix a, Matrix b, Matrix m, Vector x0,
                                       StabilityCheck check) {
  const Index n = a.rows();
  if (n == 0 || a.cols() != n) throw DimensionError("A must be square and nonempty, got " + shape(a));
  if (b.rows() != n) throw DimensionError("B must have " + std::to_string(n) + " rows, got " + shape(b));
  if (b.cols() < 1 || b.cols() > n) {
    throw DimensionError("B must have between 1 and n columns, got " + shape(b));
  }
  if (m.rows() != n || m.cols() != n) throw DimensionError("M must be n x n, got " + shape(m));
  if (x0.size() != n) throw DimensionError("x0 must have length " + std::to_string(n));
  if (!a.allFinite() || !b.allFinite() || !m.allFinite() || !x0.allFinite()) {
    throw PreconditionError("system matrices contain non-finite entries");
  }

  if (check == StabilityCheck::kVerify) {
    if (n > kMaxVerifiedDimension) {
      throw PreconditionError("stability of a dense system with n = " + std::to_string(n) +
                              " is not verified; pass StabilityCheck::kAssumeStable");
    }
    spectral_abscissa_ = validate_stability(a);
    if (!(spectral_abscissa_ < 0.0)) {
      throw InstabilityError("A is not asymptotically stable: max Re(lambda) = " +
                                 std::to_string(spectral_abscissa_),
                             spectral_abscissa_);
    }
  } else {
    spectral_abscissa_ = std::numeric_limits<double>::quiet_NaN();
  }

  a_ = std::move(a);
  b_ = std::move(b);
  m_ = symmetrize(m);
  x0_ = std::move(x0);
}

LtiQuadraticSystem::LtiQuadraticSystem(Matrix a, Matrix b, Matrix m, StabilityCheck check)
    : LtiQuadraticSystem(a, std::move(b), std::move(m), Vector::Zero(a.rows()), check) {}

LtiQuadraticSystem LtiQuadraticSystem::with_initial_state(Vector x0) const {
  if (x0.size() != n()) throw DimensionError("x0 must have length " + std::to_string(n()));
  LtiQuadraticSystem copy(*this);
  copy.x0_ = std::move(x0);
  return copy;
}

// ---------------------------------------------------------------------------

QuadraticBilinearSystem::QuadraticBilinearSystem(Matrix a_core, double epsilon, Matrix b,
                                                 Matrix bilinear_rows, Matrix s, Vector x0_aug)
    : a_core_(std::move(a_core)),
      epsilon_(epsilon),
      b_(std::move(b)),
      n_rows_(std::move(bilinear_rows)),
      s_(std::move(s)),
      x0_aug_(std::move(x0_aug)) {
  const Index n = a_core_.rows();
  if (a_core_.cols() != n || b_.rows() != n || n_rows_.rows() != b_.cols() ||
      n_rows_.cols() != n || s_.rows() != n || s_.cols() != n || x0_aug_.size() != n + 1) {
    throw DimensionError("QuadraticBilinearSystem: inconsistent block shapes");
  }
  if (!(epsilon_ >= 0.0)) throw PreconditionError("epsilon must be nonnegative");
}

Matrix QuadraticBilinearSystem::A_aug() const {
  const Index n = a_core_.rows();
  Matrix a = Matrix::Zero(n + 1, n + 1);
  a.topLeftCorner(n, n) = a_core_;
  a(n, n) = -epsilon_;
  return a;
}

Matrix QuadraticBilinearSystem::B_aug() const {
  Matrix b = Matrix::Zero(dim(), n_in());
  b.topRows(n()) = b_;
  return b;
}

Matrix QuadraticBilinearSystem::N(Index j) const {
  if (j < 0 || j >= n_in()) throw DimensionError("N: input index out of range");
  Matrix nj = Matrix::Zero(dim(), dim());
  nj.block(n(), 0, 1, n()) = n_rows_.row(j);
  return nj;
}

QuadraticBilinearSystem QuadraticBilinearSystem::with_epsilon(double epsilon) const {
  return QuadraticBilinearSystem(a_core_, epsilon, b_, n_rows_, s_, x0_aug_);
}

void QuadraticBilinearSystem::rhs(const Eigen::Ref<const Vector>& x,
                                  const Eigen::Ref<const Vector>& u,
                                  Eigen::Ref<Vector> dx) const {
  const Index n = a_core_.rows();
  if (x.size() != n + 1 || dx.size() != n + 1 || u.size() != n_in()) {
    throw DimensionError("QuadraticBilinearSystem::rhs: dimension mismatch");
  }
  const auto& k = kernels::active_table();
  k.gemv(sz(n), sz(n), a_core_.data(), sz(n), x.data(), dx.data(), false);
  k.gemv(sz(n), sz(n_in()), b_.data(), sz(n), u.data(), dx.data(), true);
  // sum_j u_j (N row j) . x  ==  (N_rows^T u) . x
  double last = -epsilon_ * x(n);
  for (Index j = 0; j < n_in(); ++j) {
    if (u(j) != 0.0) last += u(j) * n_rows_.row(j).dot(x.head(n));
  }
  last += k.quadratic_form(sz(n), s_.data(), sz(n), x.data());
  dx(n) = last;
}

// ---------------------------------------------------------------------------

MimoLinearSystem::MimoLinearSystem(Matrix a, Matrix b, Matrix l_plus, Matrix l_minus, Vector x0)
    : a_(std::move(a)),
      b_(std::move(b)),
      l_plus_(std::move(l_plus)),
      l_minus_(std::move(l_minus)),
      x0_(std::move(x0)) {
  const Index n = a_.rows();
  if (a_.cols() != n || b_.rows() != n || l_plus_.rows() != n || l_minus_.rows() != n ||
      x0_.size() != n) {
    throw DimensionError("MimoLinearSystem: inconsistent block shapes");
  }
}

Vector MimoLinearSystem::outputs(const Eigen::Ref<const Vector>& x) const {
  Vector z(num_outputs());
  z.head(l_plus_.cols()) = l_plus_.transpose() * x;
  z.tail(l_minus_.cols()) = l_minus_.transpose() * x;
  return z;
}

double MimoLinearSystem::recombine(const Eigen::Ref<const Vector>& z) const {
  if (z.size() != num_outputs()) throw DimensionError("recombine: output length mismatch");
  return z.head(l_plus_.cols()).squaredNorm() - z.tail(l_minus_.cols()).squaredNorm();
}

Matrix MimoLinearSystem::output_factor() const {
  Matrix c(n(), num_outputs());
  c.leftCols(l_plus_.cols()) = l_plus_;
  c.rightCols(l_minus_.cols()) = l_minus_;
  return c;
}

}  // namespace qbmor
