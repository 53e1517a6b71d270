#include "qbmor/balancing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "qbmor/errors.hpp"
#include "qbmor/lyapunov.hpp"

namespace qbmor {

namespace {

Matrix corner_matrix(Index n, double value) {
  Matrix out = Matrix::Zero(n + 1, n + 1);
  out(n, n) = value;
  return out;
}

Matrix top_left_matrix(const Matrix& block) {
  const Index n = block.rows();
  Matrix out = Matrix::Zero(n + 1, n + 1);
  out.topLeftCorner(n, n) = block;
  return out;
}

void check_square(const Eigen::Ref<const Matrix>& m, Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw DimensionError(std::string(what) + " must be " + std::to_string(n) + " x " +
                         std::to_string(n));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Matrix Lemma1Terms::term_i(Index j) const {
  return corner_matrix(bilinear_obs_block.rows(), bilinear_reach_corner(j));
}
Matrix Lemma1Terms::term_i_sum() const {
  return corner_matrix(bilinear_obs_block.rows(), bilinear_reach_corner.sum());
}
Matrix Lemma1Terms::term_ii() const { return top_left_matrix(bilinear_obs_block); }
Matrix Lemma1Terms::term_iii() const {
  return corner_matrix(bilinear_obs_block.rows(), quadratic_reach_corner);
}
Matrix Lemma1Terms::term_iv() const { return top_left_matrix(quadratic_obs_block); }

Lemma1Terms lemma1_terms(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p,
                         double q_prime) {
  const Index n = qb.n();
  check_square(p, n, "lemma1_terms: P");
  // Row j of the bilinear block is 2 b_j^T M.
  const Matrix mb = 0.5 * qb.bilinear_rows().transpose();  // M B, n x n_in
  Lemma1Terms out;
  out.bilinear_reach_corner = 4.0 * (mb.transpose() * p * mb).diagonal();
  out.bilinear_obs_block = 4.0 * q_prime * (mb * mb.transpose());
  const Matrix ps = p * qb.S();
  out.quadratic_reach_corner = ps.cwiseProduct(ps.transpose()).sum();
  out.quadratic_obs_block = q_prime * (qb.S() * p * qb.S());
  return out;
}

Matrix reachability_residual(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p,
                             double p_prime) {
  const Index n = qb.n();
  const Lemma1Terms t = lemma1_terms(qb, p, 0.0);
  Matrix res = Matrix::Zero(n + 1, n + 1);
  const Matrix ap = qb.A_core() * p;
  res.topLeftCorner(n, n) = ap + ap.transpose() + qb.B_core() * qb.B_core().transpose();
  res(n, n) = -2.0 * qb.epsilon() * p_prime + t.quadratic_reach_corner +
              t.bilinear_reach_corner.sum();
  return res;
}

Matrix observability_residual(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p,
                              const Eigen::Ref<const Matrix>& q, double q_prime) {
  const Index n = qb.n();
  check_square(q, n, "observability_residual: Q");
  const Lemma1Terms t = lemma1_terms(qb, p, q_prime);
  Matrix res = Matrix::Zero(n + 1, n + 1);
  const Matrix qa = q * qb.A_core();
  res.topLeftCorner(n, n) = qa.transpose() + qa + t.quadratic_obs_block + t.bilinear_obs_block;
  res(n, n) = -2.0 * qb.epsilon() * q_prime + 1.0;
  return res;
}

double compute_p_doubleprime(const Eigen::Ref<const Matrix>& p, const Eigen::Ref<const Matrix>& s,
                             const Eigen::Ref<const Matrix>& m, const Eigen::Ref<const Matrix>& b) {
  const Index n = p.rows();
  check_square(p, n, "compute_p_doubleprime: P");
  check_square(s, n, "compute_p_doubleprime: S");
  check_square(m, n, "compute_p_doubleprime: M");
  if (b.rows() != n) throw DimensionError("compute_p_doubleprime: B must have n rows");

  const Matrix ps = p * s;
  const double quad = ps.cwiseProduct(ps.transpose()).sum();  // tr((PS)^2)
  const Matrix mb = m * b;
  const double bil = 4.0 * (mb.transpose() * p * mb).trace();
  const double value = quad + bil;
  const double scale = ps.squaredNorm() + std::abs(bil);
  if (value < 0.0) {
    if (value < -1e-12 * scale) {
      throw NumericalError("compute_p_doubleprime: p'' = " + std::to_string(value) +
                           " is negative beyond roundoff; P is not positive semi-definite");
    }
    return 0.0;
  }
  return value;
}

double compute_p_doubleprime_factored(const Eigen::Ref<const Matrix>& z,
                                      const Eigen::Ref<const Matrix>& s,
                                      const Eigen::Ref<const Matrix>& m,
                                      const Eigen::Ref<const Matrix>& b) {
  const Index n = z.rows();
  check_square(s, n, "compute_p_doubleprime_factored: S");
  check_square(m, n, "compute_p_doubleprime_factored: M");
  if (b.rows() != n) throw DimensionError("compute_p_doubleprime_factored: B must have n rows");
  const Matrix zsz = z.transpose() * s * z;
  const Matrix zmb = z.transpose() * (m * b);
  return zsz.squaredNorm() + 4.0 * zmb.squaredNorm();
}

AugmentedGramians assemble_gramians(const QuadraticBilinearSystem& qb,
                                    const Eigen::Ref<const Matrix>& p,
                                    const Eigen::Ref<const Matrix>& q, double p_doubleprime) {
  const Index n = qb.n();
  check_square(p, n, "assemble_gramians: P");
  check_square(q, n, "assemble_gramians: Q");
  const double eps = qb.epsilon();
  if (!(eps > 0.0)) {
    throw PreconditionError(
        "assemble_gramians: the quadratic Lyapunov equations have no solution for epsilon = 0; "
        "stabilize with epsilon > 0");
  }
  AugmentedGramians g;
  g.P = Matrix::Zero(n + 1, n + 1);
  g.P.topLeftCorner(n, n) = p;
  g.P(n, n) = p_doubleprime / (2.0 * eps);
  g.Q = Matrix::Zero(n + 1, n + 1);
  g.Q.topLeftCorner(n, n) = q / (2.0 * eps);
  g.Q(n, n) = 1.0 / (2.0 * eps);
  return g;
}

Matrix symmetric_factor(const Eigen::Ref<const Matrix>& g, double tol_rank) {
  if (!(tol_rank >= 0.0)) throw PreconditionError("symmetric_factor: tol_rank must be >= 0");
  const Index n = g.rows();
  check_square(g, n, "symmetric_factor: G");
  if (n == 0) return Matrix(0, 0);
  if ((g - g.transpose()).norm() > 1e-10 * std::max(1.0, g.norm())) {
    throw PreconditionError("symmetric_factor: G is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(g));
  if (es.info() != Eigen::Success) throw NumericalError("symmetric_factor: eigensolver failed");
  const Vector& lambda = es.eigenvalues();  // ascending
  const double norm2 = lambda.cwiseAbs().maxCoeff();
  if (norm2 == 0.0) return Matrix(n, 0);
  if (lambda.minCoeff() < -std::max(tol_rank, 1e-12) * norm2) {
    throw NumericalError("symmetric_factor: G is indefinite (min eigenvalue " +
                         std::to_string(lambda.minCoeff()) + ")");
  }
  const double budget = tol_rank * tol_rank * lambda.squaredNorm();
  // Discard from the small end while the Frobenius error stays in budget.
  Index first = 0;
  double dropped = 0.0;
  while (first < n && (lambda(first) <= 0.0 || dropped + lambda(first) * lambda(first) <= budget)) {
    dropped += lambda(first) * lambda(first);
    ++first;
  }
  const Index k = n - first;
  Matrix l(n, k);
  for (Index c = 0; c < k; ++c) {
    const Index i = n - 1 - c;
    l.col(c) = std::sqrt(lambda(i)) * es.eigenvectors().col(i);
  }
  return l;
}

// ---------------------------------------------------------------------------

namespace {

// Square-root projection pair of width k: the leading min(k, rank) columns
// are L_Q U Sigma^(-1/2) and L_P V Sigma^(-1/2). Beyond the numerical rank
// the pair is completed biorthogonally (W^T V = I), so that k = n gives a
// similarity transformation. The completing directions are arbitrary up to
// that constraint.
void square_root_pair(const SquareRootSvd& svd, Index k, Matrix& w, Matrix& v) {
  const Index n = svd.L_P.rows();
  const Index kb = std::min(k, svd.numerical_rank);
  const Vector inv_sqrt = svd.sigma.head(kb).cwiseSqrt().cwiseInverse();
  w.resize(n, k);
  v.resize(n, k);
  w.leftCols(kb) = (svd.L_Q * svd.U.leftCols(kb)) * inv_sqrt.asDiagonal();
  v.leftCols(kb) = (svd.L_P * svd.V.leftCols(kb)) * inv_sqrt.asDiagonal();
  const Index m = k - kb;
  if (m == 0) return;
  // V2 = orthonormal basis of range(W1)^perp, W2 from the inverse of [V1 V2].
  Eigen::HouseholderQR<Matrix> qr(w.leftCols(kb));
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  Matrix t(n, n);
  t << v.leftCols(kb), q.rightCols(n - kb);
  const Eigen::PartialPivLU<Matrix> lu(t);
  const Matrix t_inv = lu.inverse();
  if (!t_inv.allFinite()) throw NumericalError("balance: basis completion is singular");
  v.rightCols(m) = q.rightCols(n - kb).leftCols(m);
  w.rightCols(m) = t_inv.middleRows(kb, m).transpose();
}

}  // namespace

SquareRootSvd square_root_svd(const Eigen::Ref<const Matrix>& l_p,
                              const Eigen::Ref<const Matrix>& l_q) {
  if (l_p.rows() != l_q.rows()) throw DimensionError("square_root_svd: factors differ in rows");
  SquareRootSvd out;
  out.L_P = l_p;
  out.L_Q = l_q;
  const Matrix core = l_q.transpose() * l_p;
  if (core.size() == 0) {
    out.sigma = Vector(0);
    out.U = Matrix(l_q.cols(), 0);
    out.V = Matrix(l_p.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.sigma = svd.singularValues();
  out.U = svd.matrixU();
  out.V = svd.matrixV();
  const double cut = out.sigma.size() > 0
                         ? out.sigma(0) * static_cast<double>(std::max(core.rows(), core.cols())) *
                               std::numeric_limits<double>::epsilon()
                         : 0.0;
  out.numerical_rank = (out.sigma.array() > cut).count();
  return out;
}

double BalancedTruncation::augmented_sigma() const {
  return std::sqrt(p_doubleprime / (2.0 * epsilon));
}

Vector qb_singular_values(const Eigen::Ref<const Vector>& sigma, double p_doubleprime,
                          double epsilon) {
  if (!(epsilon > 0.0)) throw PreconditionError("qb_singular_values: epsilon must be positive");
  Vector out(sigma.size() + 1);
  out.head(sigma.size()) = sigma;
  out(sigma.size()) = std::sqrt(p_doubleprime / (2.0 * epsilon));
  out /= std::sqrt(2.0 * epsilon);
  std::sort(out.data(), out.data() + out.size(), std::greater<double>());
  return out;
}

BalancedTruncation balance(const SquareRootSvd& svd, double p_doubleprime, double epsilon,
                           Index r) {
  const Index n = svd.L_P.rows();
  if (!(epsilon > 0.0)) {
    throw PreconditionError("balance: epsilon must be positive (no Gramians exist for epsilon = 0)");
  }
  if (r < 2) throw PreconditionError("balance: r must be at least 2");
  if (!(p_doubleprime > 0.0)) {
    throw PreconditionError("balance: p'' must be positive; the output carries no energy");
  }
  const Index k = r - 1;
  if (k > n) throw PreconditionError("balance: r must not exceed n + 1");
  const double aug = std::sqrt(p_doubleprime / (2.0 * epsilon));
  // The augmented value has to rank among the r dominant ones.
  if (svd.numerical_rank >= r && !(aug > svd.sigma(r - 1))) {
    throw PreconditionError(
        "balance: sqrt(p''/(2 eps)) = " + std::to_string(aug) +
        " is not among the r dominant singular values (r-th largest sigma = " +
        std::to_string(svd.sigma(r - 1)) + "); choose a smaller epsilon");
  }

  BalancedTruncation bt;
  bt.sigma = svd.sigma.reverse();
  bt.p_doubleprime = p_doubleprime;
  bt.epsilon = epsilon;
  bt.r = r;

  Matrix w, v;
  square_root_pair(svd, k, w, v);
  const double scale = std::pow(2.0 * epsilon, 0.25);
  bt.T_l = Matrix::Zero(n + 1, r);
  bt.T_r = Matrix::Zero(n + 1, r);
  bt.T_l.topLeftCorner(n, k) = w / scale;
  bt.T_r.topLeftCorner(n, k) = v * scale;
  bt.T_l(n, k) = std::pow(p_doubleprime, -0.25);
  bt.T_r(n, k) = std::pow(p_doubleprime, 0.25);
  return bt;
}

BalancedTruncation balance(const Eigen::Ref<const Matrix>& l_p, const Eigen::Ref<const Matrix>& l_q,
                           double p_doubleprime, double epsilon, Index r) {
  return balance(square_root_svd(l_p, l_q), p_doubleprime, epsilon, r);
}

Index suggest_rank(const Eigen::Ref<const Vector>& sigma_ascending, double fraction) {
  const double total = sigma_ascending.sum();
  const Index k = sigma_ascending.size();
  if (k == 0 || total == 0.0) return 2;
  // Keep the largest `kept` values; the tail is the rest.
  for (Index kept = 1; kept <= k; ++kept) {
    const double tail = sigma_ascending.head(k - kept).sum();
    if (tail <= fraction * total) return kept + 1;
  }
  return k + 1;
}

// ---------------------------------------------------------------------------

double ReducedModel::output_scale() const { return std::pow(p_doubleprime, 0.25); }

double ReducedModel::output(const Eigen::Ref<const Vector>& x) const {
  return output_scale() * x(x.size() - 1);
}

ReducedModel ReducedModel::with_initial_state(Vector x0_new) const {
  if (x0_new.size() != r()) throw DimensionError("ReducedModel: x0 must have length r");
  ReducedModel copy(*this);
  copy.x0 = std::move(x0_new);
  return copy;
}

ReducedModel reduce(const QuadraticBilinearSystem& qb, const BalancedTruncation& bt,
                    double epsilon_rom) {
  const Index n = qb.n();
  const Index r = bt.r;
  const Index k = r - 1;
  if (bt.T_l.rows() != n + 1 || bt.T_r.rows() != n + 1 || bt.T_l.cols() != r ||
      bt.T_r.cols() != r) {
    throw DimensionError("reduce: projection matrices do not match the system");
  }
  if (!(epsilon_rom >= 0.0)) throw PreconditionError("reduce: epsilon_rom must be >= 0");

  // Undo the (2 eps)^(+-1/4) scaling of the balanced coordinates so that no
  // reduced matrix depends on eps.
  const double scale = std::pow(2.0 * bt.epsilon, 0.25);
  ReducedModel rom;
  rom.W = bt.T_l;
  rom.V = bt.T_r;
  rom.W.topLeftCorner(n, k) *= scale;
  rom.V.topLeftCorner(n, k) /= scale;

  const auto w_top = rom.W.topLeftCorner(n, k);
  const auto v_top = rom.V.topLeftCorner(n, k);
  const double w_corner = rom.W(n, k);

  // Projected linear part; its off-diagonal blocks vanish by structure.
  const Matrix a_bar = rom.W.transpose() * qb.A_aug() * rom.V;
  rom.A_star = a_bar.topLeftCorner(k, k);
  rom.epsilon_rom = epsilon_rom;
  rom.B_star = w_top.transpose() * qb.B_core();
  // Only the last row of N_j is occupied, so only W's last row contributes.
  rom.N_star = w_corner * (qb.bilinear_rows() * v_top);
  // Nonzero block of the projected quadratic term: W[n,:]^T-scaled V^T S V.
  rom.S_star = symmetrize(w_corner * (v_top.transpose() * qb.S() * v_top));
  rom.p_doubleprime = bt.p_doubleprime;
  rom.x0 = rom.W.transpose() * qb.x0_aug();
  return rom;
}

RecoveredLinear reduced_linear_recovery(const ReducedModel& rom) {
  if (rom.epsilon_rom != 0.0) {
    throw PreconditionError("reduced_linear_recovery: requires epsilon_rom = 0");
  }
  // A*^T M + M A* - S* = 0
  const Matrix m_star = solve_lyapunov_dense(rom.A_star.transpose(), -rom.S_star);
  LtiQuadraticSystem sys(rom.A_star, rom.B_star, m_star, rom.x0.head(rom.r() - 1));
  return RecoveredLinear{std::move(sys), rom.output_scale()};
}

// ---------------------------------------------------------------------------

LinearTruncation linear_balance(const SquareRootSvd& svd, Index r) {
  if (r < 1) throw PreconditionError("linear_balance: r must be at least 1");
  if (r > svd.L_P.rows()) throw PreconditionError("linear_balance: r must not exceed n");
  LinearTruncation lt;
  square_root_pair(svd, r, lt.T_l, lt.T_r);
  return lt;
}

LtiQuadraticSystem reduce_linear(const LtiQuadraticSystem& fom, const LinearTruncation& lt) {
  if (lt.T_l.rows() != fom.n() || lt.T_r.rows() != fom.n()) {
    throw DimensionError("reduce_linear: projection does not match the system");
  }
  Matrix a = lt.T_l.transpose() * fom.A() * lt.T_r;
  Matrix b = lt.T_l.transpose() * fom.B();
  Matrix m = lt.T_r.transpose() * fom.M() * lt.T_r;
  Vector x0 = lt.T_l.transpose() * fom.x0();
  return LtiQuadraticSystem(std::move(a), std::move(b), std::move(m), std::move(x0));
}

}  // namespace qbmor
