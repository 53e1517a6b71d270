#include "qbmor/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include "qbmor/errors.hpp"

namespace qbmor {

namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Start index and size (1 or 2) of each diagonal block of a real Schur form.
std::vector<std::pair<Index, Index>> schur_blocks(const Matrix& t) {
  std::vector<std::pair<Index, Index>> blocks;
  const Index n = t.rows();
  for (Index i = 0; i < n;) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      blocks.emplace_back(i, 2);
      i += 2;
    } else {
      blocks.emplace_back(i, 1);
      i += 1;
    }
  }
  return blocks;
}

double block_real_part(const Matrix& t, std::pair<Index, Index> b) {
  const auto [i, s] = b;
  return s == 1 ? t(i, i) : 0.5 * (t(i, i) + t(i + 1, i + 1));
}

// Solves T_ii Y + Y T_jj^T = R for a p x q block (p, q in {1, 2}).
Matrix solve_small_sylvester(const Matrix& tii, const Matrix& tjj, const Matrix& r,
                             double scale) {
  const Index p = tii.rows();
  const Index q = tjj.rows();
  if (p == 1 && q == 1) {
    const double d = tii(0, 0) + tjj(0, 0);
    if (std::abs(d) <= 64 * kEps * scale) {
      throw NumericalError("solve_lyapunov_dense: singular Sylvester operator (lambda_i + lambda_j ~ 0)");
    }
    return Matrix::Constant(1, 1, r(0, 0) / d);
  }
  // (I_q kron T_ii + T_jj kron I_p) vec(Y) = vec(R)
  Matrix k = Matrix::Zero(p * q, p * q);
  for (Index c = 0; c < q; ++c) {
    k.block(c * p, c * p, p, p) += tii;
    for (Index d = 0; d < q; ++d) {
      k.block(c * p, d * p, p, p) += tjj(c, d) * Matrix::Identity(p, p);
    }
  }
  Eigen::FullPivLU<Matrix> lu(k);
  lu.setThreshold(64 * kEps * std::max(1.0, scale) / std::max(1e-300, k.cwiseAbs().maxCoeff()));
  if (!lu.isInvertible()) {
    throw NumericalError("solve_lyapunov_dense: singular Sylvester operator (lambda_i + lambda_j ~ 0)");
  }
  const Vector y = lu.solve(Eigen::Map<const Vector>(r.data(), p * q));
  return Eigen::Map<const Matrix>(y.data(), p, q);
}

}  // namespace

double lyapunov_residual(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& g,
                         const Eigen::Ref<const Matrix>& f) {
  const Matrix ag = a * g;
  const double res = (ag + ag.transpose() + f).norm();
  const double fn = f.norm();
  return fn > 0.0 ? res / fn : res;
}

Matrix solve_lyapunov_dense(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& f) {
  const Index n = a.rows();
  if (a.cols() != n || f.rows() != n || f.cols() != n) {
    throw DimensionError("solve_lyapunov_dense: A and F must be n x n");
  }
  if ((f - f.transpose()).norm() > 1e-12 * std::max(1.0, f.norm())) {
    throw PreconditionError("solve_lyapunov_dense: F must be symmetric");
  }
  if (n == 0) return Matrix(0, 0);

  Eigen::RealSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("solve_lyapunov_dense: real Schur decomposition did not converge");
  }
  const Matrix& t = schur.matrixT();
  const Matrix& u = schur.matrixU();
  const auto blocks = schur_blocks(t);

  double abscissa = -std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) abscissa = std::max(abscissa, block_real_part(t, b));
  if (!(abscissa < 0.0)) {
    throw InstabilityError("solve_lyapunov_dense: A is not stable (max Re(lambda) = " +
                               std::to_string(abscissa) + ")",
                           abscissa);
  }

  // T X + X T^T = C with X = U^T G U, C = -U^T F U.
  const Matrix c = -(u.transpose() * f * u);
  const double scale = t.cwiseAbs().maxCoeff();
  Matrix x = Matrix::Zero(n, n);

  for (auto jb = blocks.rbegin(); jb != blocks.rend(); ++jb) {
    const auto [j0, q] = *jb;
    const Index after_j = n - (j0 + q);
    Matrix r = c.middleCols(j0, q);
    if (after_j > 0) {
      r.noalias() -= x.rightCols(after_j) * t.block(j0, j0 + q, q, after_j).transpose();
    }
    const Matrix tjj = t.block(j0, j0, q, q);
    // T Y + Y T_jj^T = R, row blocks bottom-up.
    Matrix y = Matrix::Zero(n, q);
    for (auto ib = blocks.rbegin(); ib != blocks.rend(); ++ib) {
      const auto [i0, p] = *ib;
      const Index after_i = n - (i0 + p);
      Matrix rhs = r.middleRows(i0, p);
      if (after_i > 0) {
        rhs.noalias() -= t.block(i0, i0 + p, p, after_i) * y.bottomRows(after_i);
      }
      y.middleRows(i0, p) = solve_small_sylvester(t.block(i0, i0, p, p), tjj, rhs, scale);
    }
    x.middleCols(j0, q) = y;
  }

  Matrix g = u * x * u.transpose();
  return symmetrize(g);
}

Matrix clip_to_psd(const Eigen::Ref<const Matrix>& g, double tol) {
  if (g.rows() != g.cols()) throw DimensionError("clip_to_psd: matrix must be square");
  if (g.rows() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(g));
  if (es.info() != Eigen::Success) throw NumericalError("clip_to_psd: eigensolver failed");
  Vector lambda = es.eigenvalues();
  const double norm = lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() >= 0.0) return symmetrize(g);
  if (lambda.minCoeff() < -tol * norm) {
    throw NumericalError("clip_to_psd: matrix is indefinite beyond tolerance (min eigenvalue " +
                         std::to_string(lambda.minCoeff()) + ")");
  }
  lambda = lambda.cwiseMax(0.0);
  const Matrix& v = es.eigenvectors();
  return symmetrize(v * lambda.asDiagonal() * v.transpose());
}

// ---------------------------------------------------------------------------

void ShiftSet::validate() const {
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const Complex p = shifts[i];
    if (!(p.real() < 0.0) || !std::isfinite(p.imag())) {
      throw PreconditionError("ADI shift " + std::to_string(i) + " has nonnegative real part");
    }
    if (p.imag() != 0.0) {
      if (i + 1 >= shifts.size() || shifts[i + 1] != std::conj(p)) {
        throw PreconditionError("ADI shift " + std::to_string(i) +
                                " is complex but not followed by its conjugate");
      }
      ++i;
    }
  }
}

double adi_minmax_objective(const std::vector<Complex>& points,
                            const std::vector<Complex>& shifts) {
  double worst = 0.0;
  for (const Complex& t : points) {
    double v = 1.0;
    for (const Complex& p : shifts) v *= std::abs((t - p) / (t + std::conj(p)));
    worst = std::max(worst, v);
  }
  return worst;
}

namespace {

// Arnoldi with full reorthogonalization; returns the square Hessenberg block
// of the steps that completed before breakdown.
template <typename ApplyOp>
Matrix arnoldi(ApplyOp&& apply, Index n, int steps) {
  const Index k = std::min<Index>(steps, n);
  Matrix v = Matrix::Zero(n, k + 1);
  Matrix h = Matrix::Zero(k + 1, k);
  v.col(0) = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Index done = 0;
  Vector w(n);
  for (Index j = 0; j < k; ++j) {
    apply(v.col(j), w);
    const double wnorm0 = w.norm();
    for (int pass = 0; pass < 2; ++pass) {
      const Vector c = v.leftCols(j + 1).transpose() * w;
      w.noalias() -= v.leftCols(j + 1) * c;
      h.col(j).head(j + 1) += c;
    }
    done = j + 1;
    const double beta = w.norm();
    h(j + 1, j) = beta;
    if (!(beta > 1e-12 * std::max(wnorm0, 1e-300))) break;  // invariant subspace found
    v.col(j + 1) = w / beta;
  }
  return h.topLeftCorner(done, done);
}

std::vector<Complex> ritz_values(const Matrix& h) {
  std::vector<Complex> out;
  if (h.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> es(h, false);
  if (es.info() != Eigen::Success) return out;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

// Keeps the `count` entries of largest modulus, then closes under conjugation.
std::vector<Complex> largest_magnitude(std::vector<Complex> values, int count) {
  std::stable_sort(values.begin(), values.end(),
                   [](Complex x, Complex y) { return std::abs(x) > std::abs(y); });
  if (static_cast<int>(values.size()) > count) values.resize(static_cast<std::size_t>(count));
  std::vector<Complex> closed = values;
  for (const Complex& v : values) {
    if (v.imag() != 0.0 &&
        std::find(closed.begin(), closed.end(), std::conj(v)) == closed.end()) {
      closed.push_back(std::conj(v));
    }
  }
  return closed;
}

Complex clean(Complex z) {
  if (std::abs(z.imag()) <= 1e-12 * std::abs(z)) return {z.real(), 0.0};
  return z;
}

void push_unique(std::vector<Complex>& set, Complex z) {
  for (const Complex& s : set) {
    if (std::abs(s - z) <= 1e-10 * std::max(std::abs(s), std::abs(z))) return;
  }
  set.push_back(z);
}

void append_with_conjugate(std::vector<Complex>& out, Complex p) {
  if (p.imag() == 0.0) {
    out.push_back(p);
  } else {
    const Complex upper{p.real(), std::abs(p.imag())};
    out.push_back(upper);
    out.push_back(std::conj(upper));
  }
}

}  // namespace

ShiftSet compute_shifts(const Eigen::Ref<const Matrix>& a, const ShiftOptions& opts) {
  const Index n = a.rows();
  if (a.cols() != n || n == 0) throw DimensionError("compute_shifts: A must be square and nonempty");
  if (opts.num_shifts < 1) throw PreconditionError("compute_shifts: num_shifts must be >= 1");

  const Matrix am = a;
  Eigen::PartialPivLU<Matrix> lu(am);

  const Matrix h_plus = arnoldi([&](const auto& x, Vector& y) { y.noalias() = am * x; }, n,
                                opts.arnoldi_steps_large);
  const Matrix h_minus = arnoldi([&](const auto& x, Vector& y) { y = lu.solve(Vector(x)); }, n,
                                 opts.arnoldi_steps_small);

  std::vector<Complex> large = largest_magnitude(ritz_values(h_plus), opts.num_ritz_large);
  std::vector<Complex> small_inv = largest_magnitude(ritz_values(h_minus), opts.num_ritz_small);

  std::vector<Complex> candidates;
  for (Complex z : large) {
    z = clean(z);
    if (z.real() < 0.0 && std::isfinite(z.real())) push_unique(candidates, z);
  }
  for (Complex mu : small_inv) {
    if (mu == Complex(0.0, 0.0)) continue;
    const Complex z = clean(1.0 / mu);
    if (z.real() < 0.0 && std::isfinite(z.real())) push_unique(candidates, z);
  }

  ShiftSet out;
  if (candidates.empty()) {
    // Norm-based magnitude proxies: |A|_1 >= |lambda|_max, 1/|A^{-1}|_1 <= |lambda|_min.
    const double lmax = am.cwiseAbs().colwise().sum().maxCoeff();
    const Matrix inv = lu.inverse();
    const double lmin = 1.0 / inv.cwiseAbs().colwise().sum().maxCoeff();
    for (double m : {lmin, std::sqrt(lmin * lmax), lmax}) {
      if (std::isfinite(m) && m > 0.0) push_unique(out.shifts, Complex(-m, 0.0));
    }
    if (out.shifts.empty()) throw NumericalError("compute_shifts: no usable shift candidates");
    out.validate();
    return out;
  }

  // Greedy min-max selection on the candidate set.
  const std::size_t want = static_cast<std::size_t>(opts.num_shifts);
  std::vector<Complex> chosen;
  {
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      std::vector<Complex> trial;
      append_with_conjugate(trial, candidates[i]);
      const double v = adi_minmax_objective(candidates, trial);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    append_with_conjugate(chosen, candidates[best]);
  }
  while (chosen.size() < want) {
    std::size_t worst = 0;
    double worst_val = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      double v = 1.0;
      for (const Complex& p : chosen) v *= std::abs((candidates[i] - p) / (candidates[i] + std::conj(p)));
      if (v > worst_val) {
        worst_val = v;
        worst = i;
      }
    }
    if (worst_val <= 0.0) break;  // every candidate already a shift
    append_with_conjugate(chosen, candidates[worst]);
  }
  out.shifts = std::move(chosen);
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------

GramianFactor solve_lyapunov_adi(const Eigen::Ref<const Matrix>& a,
                                 const Eigen::Ref<const Matrix>& z_f, const ShiftSet& shifts,
                                 const AdiOptions& opts) {
  const Index n = a.rows();
  if (a.cols() != n || z_f.rows() != n) {
    throw DimensionError("solve_lyapunov_adi: A must be n x n and Z_F must have n rows");
  }
  if (shifts.size() == 0) throw PreconditionError("solve_lyapunov_adi: empty shift set");
  shifts.validate();
  if (opts.max_iter < 1) throw PreconditionError("solve_lyapunov_adi: max_iter must be >= 1");

  GramianFactor out;
  out.kind = opts.kind;
  const Index kf = z_f.cols();

  Matrix w = z_f;
  const auto sq_norm2 = [](const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const double s = svd.singularValues()(0);
    return s * s;
  };
  const double res0 = sq_norm2(w);
  if (kf == 0 || res0 == 0.0) {
    out.Z = Matrix::Zero(n, std::max<Index>(kf, 1));
    out.residual_norm = 0.0;
    return out;
  }

  const double a_norm = a.cwiseAbs().maxCoeff();
  std::map<std::size_t, Eigen::PartialPivLU<Matrix>> real_lu;
  std::map<std::size_t, Eigen::PartialPivLU<ComplexMatrix>> complex_lu;
  const auto check_pivots = [&](const auto& lu, int iter) {
    const auto diag = lu.matrixLU().diagonal().cwiseAbs();
    if (!(diag.minCoeff() > 64 * kEps * std::max(1.0, a_norm))) {
      throw NumericalError("solve_lyapunov_adi: A + p I is singular at iteration " +
                           std::to_string(iter));
    }
  };

  std::vector<Matrix> blocks;
  int iter = 0;
  std::size_t s = 0;
  while (iter < opts.max_iter) {
    const std::size_t idx = s % shifts.size();
    const Complex p = shifts.shifts[idx];
    if (p.imag() == 0.0) {
      auto it = real_lu.find(idx);
      if (it == real_lu.end()) {
        Matrix shifted = a;
        shifted.diagonal().array() += p.real();
        it = real_lu.emplace(idx, Eigen::PartialPivLU<Matrix>(shifted)).first;
        check_pivots(it->second, iter + 1);
      }
      const Matrix v = it->second.solve(w);
      w.noalias() -= 2.0 * p.real() * v;
      blocks.push_back(std::sqrt(-2.0 * p.real()) * v);
      iter += 1;
      s += 1;
    } else {
      auto it = complex_lu.find(idx);
      if (it == complex_lu.end()) {
        ComplexMatrix shifted = a.cast<Complex>();
        shifted.diagonal().array() += p;
        it = complex_lu.emplace(idx, Eigen::PartialPivLU<ComplexMatrix>(shifted)).first;
        check_pivots(it->second, iter + 1);
      }
      const ComplexMatrix v = it->second.solve(w.cast<Complex>());
      const double gamma = 2.0 * std::sqrt(-p.real());
      const double delta = p.real() / p.imag();
      const Matrix vr = v.real() + delta * v.imag();
      w.noalias() += gamma * gamma * vr;
      blocks.push_back(gamma * vr);
      blocks.push_back(gamma * std::sqrt(delta * delta + 1.0) * v.imag());
      iter += 2;
      s += 2;
    }
    const double res = sq_norm2(w) / res0;
    out.residual_history.push_back(res);
    if (p.imag() != 0.0) out.residual_history.push_back(res);
    out.residual_norm = res;
    if (opts.tol > 0.0 && res <= opts.tol) break;
  }

  out.Z.resize(n, static_cast<Index>(blocks.size()) * kf);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.Z.middleCols(static_cast<Index>(i) * kf, kf) = blocks[i];
  }
  return out;
}

void write_residual_csv(std::ostream& out, const GramianFactor& factor) {
  out << "iter,residual\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < factor.residual_history.size(); ++i) {
    out << (i + 1) << ',' << factor.residual_history[i] << '\n';
  }
  out.precision(old);
}

// ---------------------------------------------------------------------------

Matrix observability_rhs_factor(const Eigen::Ref<const Matrix>& s,
                                const Eigen::Ref<const Matrix>& z_p,
                                const Eigen::Ref<const Matrix>& m,
                                const Eigen::Ref<const Matrix>& b, Index k_p_prime) {
  const Index n = s.rows();
  if (s.cols() != n || z_p.rows() != n || m.rows() != n || m.cols() != n || b.rows() != n) {
    throw DimensionError("observability_rhs_factor: inconsistent shapes");
  }
  if (k_p_prime < 0 || k_p_prime > z_p.cols()) {
    throw PreconditionError("observability_rhs_factor: k_p_prime exceeds the columns of Z_P");
  }
  Matrix out(n, k_p_prime + b.cols());
  out.leftCols(k_p_prime).noalias() = s * z_p.leftCols(k_p_prime);
  out.rightCols(b.cols()).noalias() = 2.0 * (m * b);
  return out;
}

Matrix compress_factor(const Eigen::Ref<const Matrix>& z, double tol_rank) {
  const Index n = z.rows();
  const Index k = z.cols();
  if (k == 0) return Matrix(n, 0);

  // Thin QR first when Z is tall; the SVD then only sees a k x k block.
  Matrix q;
  Matrix r;
  if (n > k) {
    Eigen::HouseholderQR<Matrix> qr(z);
    q = qr.householderQ() * Matrix::Identity(n, k);
    r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  } else {
    q = Matrix::Identity(n, n);
    r = z;
  }
  Eigen::JacobiSVD<Matrix> svd(r, Eigen::ComputeThinU);
  const Vector& sigma = svd.singularValues();
  const Vector s4 = sigma.array().pow(4).matrix();
  const double total = s4.sum();
  if (total == 0.0) return Matrix(n, 0);

  // Smallest rank whose discarded tail satisfies the Frobenius bound.
  const double budget = tol_rank * tol_rank * total;
  Index keep = sigma.size();
  double tail = 0.0;
  while (keep > 0 && tail + s4(keep - 1) <= budget) {
    tail += s4(keep - 1);
    --keep;
  }
  keep = std::max<Index>(keep, 1);
  return q * svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal();
}

}  // namespace qbmor
