#include "qbmor/transform.hpp"

#include <cmath>
#include <vector>

#include "qbmor/errors.hpp"

namespace qbmor {

IndefiniteSplit split_indefinite(const Eigen::Ref<const Matrix>& m, double tol_split) {
  if (m.rows() != m.cols()) throw DimensionError("split_indefinite: M must be square");
  if (!(tol_split > 0.0)) throw PreconditionError("split_indefinite: tol_split must be positive");
  const double asym = (m - m.transpose()).norm();
  if (asym > 1e-12 * std::max(1.0, m.norm())) {
    throw PreconditionError("split_indefinite: M is not symmetric");
  }
  const Index n = m.rows();
  IndefiniteSplit out{Matrix(n, 0), Matrix(n, 0)};
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  if (es.info() != Eigen::Success) throw NumericalError("split_indefinite: eigensolver failed");
  const Vector& lambda = es.eigenvalues();
  const double scale = lambda.cwiseAbs().maxCoeff();
  if (scale == 0.0) return out;
  const double cut = tol_split * scale;

  std::vector<Index> pos, neg;
  // Largest magnitude first within each block.
  for (Index i = n - 1; i >= 0; --i) {
    if (lambda(i) > cut) pos.push_back(i);
  }
  for (Index i = 0; i < n; ++i) {
    if (lambda(i) < -cut) neg.push_back(i);
  }
  out.plus.resize(n, static_cast<Index>(pos.size()));
  out.minus.resize(n, static_cast<Index>(neg.size()));
  for (std::size_t k = 0; k < pos.size(); ++k) {
    out.plus.col(static_cast<Index>(k)) = std::sqrt(lambda(pos[k])) * es.eigenvectors().col(pos[k]);
  }
  for (std::size_t k = 0; k < neg.size(); ++k) {
    out.minus.col(static_cast<Index>(k)) =
        std::sqrt(-lambda(neg[k])) * es.eigenvectors().col(neg[k]);
  }
  return out;
}

MimoLinearSystem to_mimo_linear(const LtiQuadraticSystem& sys, double tol_split) {
  IndefiniteSplit split = split_indefinite(sys.M(), tol_split);
  return MimoLinearSystem(sys.A(), sys.B(), std::move(split.plus), std::move(split.minus),
                          sys.x0());
}

QuadraticBilinearSystem to_quadratic_bilinear(const LtiQuadraticSystem& sys, double epsilon) {
  if (!(epsilon >= 0.0)) throw PreconditionError("to_quadratic_bilinear: epsilon must be >= 0");
  const Matrix& a = sys.A();
  const Matrix& m = sys.M();
  Matrix s = a.transpose() * m;
  s = symmetrize(s + s.transpose());  // A^T M + M A, exactly symmetric
  Matrix n_rows = 2.0 * (sys.B().transpose() * m);
  Vector x0_aug(sys.n() + 1);
  x0_aug.head(sys.n()) = sys.x0();
  x0_aug(sys.n()) = sys.output(sys.x0());
  return QuadraticBilinearSystem(a, epsilon, sys.B(), std::move(n_rows), std::move(s),
                                 std::move(x0_aug));
}

bool bilinear_vanishes(const LtiQuadraticSystem& sys) {
  const Matrix& m = sys.M();
  // Spectral norm of a symmetric matrix: largest |eigenvalue|.
  const double m_norm =
      m.rows() == 0 ? 0.0
                    : Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .cwiseAbs()
                          .maxCoeff();
  for (Index j = 0; j < sys.n_in(); ++j) {
    const double bound = kBilinearVanishTolerance * m_norm * sys.B().col(j).norm();
    const Vector bm = m * sys.B().col(j);
    if (bm.cwiseAbs().maxCoeff() > bound) return false;
  }
  return true;
}

}  // namespace qbmor
