#pragma once

// Independent reference evaluations built directly from the defining
// formulas with explicit Kronecker products. Deliberately naive; only meant
// for small n.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Augmented model of x' = Ax + Bu, y = x^T M x with y as state n+1.
struct Augmented {
  Matrix A;               // (n+1) x (n+1), corner -eps
  Matrix B;               // (n+1) x m
  std::vector<Matrix> N;  // (n+1) x (n+1) each
  Matrix H;               // (n+1) x (n+1)^2, mode-1 unfolding
  Matrix H2;              // (n+1) x (n+1)^2, mode-2 unfolding
  Matrix C;               // 1 x (n+1)
};

inline Augmented augment(const Matrix& a, const Matrix& b, const Matrix& m, double eps) {
  const Index n = a.rows();
  const Index big = n + 1;
  Augmented aug;
  aug.A = Matrix::Zero(big, big);
  aug.A.topLeftCorner(n, n) = a;
  aug.A(n, n) = -eps;
  aug.B = Matrix::Zero(big, b.cols());
  aug.B.topRows(n) = b;

  const Matrix msym = 0.5 * (m + m.transpose());
  for (Index j = 0; j < b.cols(); ++j) {
    Matrix nj = Matrix::Zero(big, big);
    nj.block(n, 0, 1, n) = 2.0 * b.col(j).transpose() * msym;
    aug.N.push_back(nj);
  }

  // d/dt x^T M x = x^T (A^T M + M A) x: tensor entries h[n][a][c] = S(a, c).
  const Matrix s = a.transpose() * msym + msym * a;
  aug.H = Matrix::Zero(big, big * big);
  aug.H2 = Matrix::Zero(big, big * big);
  for (Index p = 0; p < n; ++p) {
    for (Index q = 0; q < n; ++q) {
      // (x kron x)[p * big + q] = x_p x_q
      aug.H(n, p * big + q) = s(p, q);
      // mode 2: row p, column (q, i) with i the output index
      aug.H2(p, q * big + n) = s(p, q);
    }
  }
  aug.C = Matrix::Zero(1, big);
  aug.C(0, n) = 1.0;
  return aug;
}

inline Matrix term_i(const Augmented& g, const Matrix& pt) {
  Matrix sum = Matrix::Zero(pt.rows(), pt.cols());
  for (const Matrix& nj : g.N) sum += nj * pt * nj.transpose();
  return sum;
}

inline Matrix term_ii(const Augmented& g, const Matrix& qt) {
  Matrix sum = Matrix::Zero(qt.rows(), qt.cols());
  for (const Matrix& nj : g.N) sum += nj.transpose() * qt * nj;
  return sum;
}

inline Matrix term_iii(const Augmented& g, const Matrix& pt) {
  const Matrix kp = Eigen::kroneckerProduct(pt, pt);
  return g.H * kp * g.H.transpose();
}

inline Matrix term_iv(const Augmented& g, const Matrix& pt, const Matrix& qt) {
  const Matrix kpq = Eigen::kroneckerProduct(pt, qt);
  return g.H2 * kpq * g.H2.transpose();
}

/// A P + P A^T + sum N P N^T + H (P kron P) H^T + B B^T.
inline Matrix reach_lhs(const Augmented& g, const Matrix& pt) {
  return g.A * pt + pt * g.A.transpose() + term_i(g, pt) + term_iii(g, pt) +
         g.B * g.B.transpose();
}

/// A^T Q + Q A + sum N^T Q N + H2 (P kron Q) H2^T + C^T C.
inline Matrix obs_lhs(const Augmented& g, const Matrix& pt, const Matrix& qt) {
  return g.A.transpose() * qt + qt * g.A + term_ii(g, qt) + term_iv(g, pt, qt) +
         g.C.transpose() * g.C;
}

/// Solves the observability equation for Q~ as one linear system in vec(Q~),
/// assembling the operator column by column from obs_lhs.
inline Matrix solve_obs_vectorized(const Augmented& g, const Matrix& pt) {
  const Index big = g.A.rows();
  const Matrix zero = Matrix::Zero(big, big);
  const Matrix constant = obs_lhs(g, pt, zero);
  Matrix op(big * big, big * big);
  for (Index k = 0; k < big * big; ++k) {
    Matrix e = Matrix::Zero(big, big);
    e(k % big, k / big) = 1.0;
    const Matrix col = obs_lhs(g, pt, e) - constant;
    op.col(k) = Eigen::Map<const Vector>(col.data(), big * big);
  }
  const Vector rhs = -Eigen::Map<const Vector>(constant.data(), big * big);
  const Vector sol = op.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(sol.data(), big, big);
}

/// Lyapunov A X + X A^T + F = 0 through the Kronecker sum.
inline Matrix lyap_kron(const Matrix& a, const Matrix& f) {
  const Index n = a.rows();
  const Matrix id = Matrix::Identity(n, n);
  const Matrix op = Eigen::kroneckerProduct(id, a) + Eigen::kroneckerProduct(a, id);
  const Vector rhs = -Eigen::Map<const Vector>(f.data(), n * n);
  const Vector sol = op.fullPivLu().solve(rhs);
  return Eigen::Map<const Matrix>(sol.data(), n, n);
}

/// Stable random test matrix: Gaussian, shifted so max Re lambda <= -shift.
inline Matrix random_stable(Index n, std::mt19937_64& rng, double shift = 0.5) {
  std::normal_distribution<double> normal;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = normal(rng);
  const double abscissa = a.eigenvalues().real().maxCoeff();
  a -= (abscissa + shift) * Matrix::Identity(n, n);
  return a;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

inline Matrix random_symmetric(Index n, std::mt19937_64& rng) {
  const Matrix t = random_matrix(n, n, rng);
  return 0.5 * (t + t.transpose());
}

inline Matrix random_spd(Index n, std::mt19937_64& rng) {
  const Matrix t = random_matrix(n, n, rng);
  return t * t.transpose() + Matrix::Identity(n, n);
}

/// Least-squares slope of ys against xs.
inline double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double count = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= count;
  my /= count;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

/// Relative Frobenius distance |x - ref| / |ref|.
inline double rel(const Matrix& x, const Matrix& ref) {
  return (x - ref).norm() / ref.norm();
}

}  // namespace oracle
