#include "qbmor/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "qbmor/errors.hpp"
#include "qbmor/kernels.hpp"

namespace qbmor {

namespace {

std::size_t sz(Index i) { return static_cast<std::size_t>(i); }

// Dormand-Prince 4(5) tableau.
constexpr std::array<double, 7> kC = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[5][5] = {
    {1.0 / 5, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
};
constexpr std::array<double, 7> kB5 = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192,
                                       -2187.0 / 6784, 11.0 / 84, 0};
constexpr std::array<double, 7> kB4 = {5179.0 / 57600,    0,          7571.0 / 16695, 393.0 / 640,
                                       -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

// Continuous extension: y(t + th h) = y + h sum_j k_j (sum_m P[j][m] th^(m+1)).
constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0, 0, 0, 0},
    {0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933,
     87487479700.0 / 32700410799},
    {0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408,
     701980252875.0 / 199316789632},
    {0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

// Step-size controller (Hairer's DOPRI5 defaults).
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - 0.75 * kBeta;
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;  // h_new >= 0.2 h
constexpr double kMaxFactor = 10.0;

struct Stepper {
  const OdeRhs& f;
  Index n;
  std::array<Vector, 7> k;
  Vector stage;
  const kernels::KernelTable& kt = kernels::active_table();

  Stepper(const OdeRhs& rhs, Index dim) : f(rhs), n(dim), stage(dim) {
    for (auto& v : k) v.resize(dim);
  }

  // Requires k[0] = f(t, y). Fills k[1..6] and y_new; k[6] = f(t+h, y_new).
  void step(double t, const Vector& y, double h, Vector& y_new, long& evals) {
    std::array<const double*, 7> ptr;
    for (int j = 0; j < 7; ++j) ptr[j] = k[j].data();
    for (int i = 1; i < 6; ++i) {
      kt.lincomb(sz(n), y.data(), h, kA[i - 1], ptr.data(), sz(i), stage.data());
      f(t + kC[i] * h, stage, k[i]);
      ++evals;
    }
    kt.lincomb(sz(n), y.data(), h, kB5.data(), ptr.data(), 6, y_new.data());
    f(t + h, y_new, k[6]);
    ++evals;
  }

  void error_estimate(double h, Vector& err) const {
    err.setZero();
    for (int j = 0; j < 7; ++j) {
      const double e = kB5[j] - kB4[j];
      if (e != 0.0) err.noalias() += (h * e) * k[j];
    }
  }

  void dense(const Vector& y, double h, double theta, Vector& out) const {
    std::array<double, 7> coeffs;
    std::array<const double*, 7> ptr;
    for (int j = 0; j < 7; ++j) {
      double c = 0.0;
      double p = theta;
      for (int m = 0; m < 4; ++m) {
        c += kP[j][m] * p;
        p *= theta;
      }
      coeffs[j] = c;
      ptr[j] = k[j].data();
    }
    kt.lincomb(sz(n), y.data(), h, coeffs.data(), ptr.data(), 7, out.data());
  }
};

double initial_step(const OdeRhs& f, double t0, const Vector& y0, const Vector& f0, double rtol,
                    double atol, double max_step, long& evals) {
  const Index n = y0.size();
  if (n == 0) return max_step;
  const Vector scale = (atol + rtol * y0.array().abs()).matrix();
  const double rms = std::sqrt(static_cast<double>(n));
  const double d0 = y0.cwiseQuotient(scale).norm() / rms;
  const double d1 = f0.cwiseQuotient(scale).norm() / rms;
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, max_step);
  const Vector y1 = y0 + h0 * f0;
  Vector f1(n);
  f(t0 + h0, y1, f1);
  ++evals;
  const double d2 = (f1 - f0).cwiseQuotient(scale).norm() / rms / h0;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, max_step});
}

void append_output(Trajectory& traj, double t, const Vector& x, const OutputMap& output,
                   bool store_states, std::vector<Vector>& rows) {
  traj.times.push_back(t);
  rows.push_back(output ? output(x) : x);
  if (store_states) traj.states.push_back(x);
}

Matrix stack_rows(const std::vector<Vector>& rows) {
  if (rows.empty()) return Matrix(0, 0);
  Matrix out(static_cast<Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = rows[i];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void Trajectory::validate() const {
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw PreconditionError("Trajectory: times must be strictly increasing");
    }
  }
  if (output.rows() != size()) throw DimensionError("Trajectory: output rows != number of times");
  if (!states.empty() && static_cast<Index>(states.size()) != size()) {
    throw DimensionError("Trajectory: states count != number of times");
  }
}

InputSignal InputSignal::zero() { return InputSignal(); }

InputSignal InputSignal::chirp(double k0) {
  InputSignal s;
  s.kind_ = Kind::kChirp;
  s.param_ = k0;
  return s;
}

InputSignal InputSignal::harmonic(double omega) {
  InputSignal s;
  s.kind_ = Kind::kHarmonic;
  s.param_ = omega;
  return s;
}

InputSignal InputSignal::table(std::vector<double> times, Matrix values) {
  if (times.empty()) throw PreconditionError("InputSignal::table: empty table");
  if (static_cast<Index>(times.size()) != values.rows()) {
    throw DimensionError("InputSignal::table: one row of values per time required");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw PreconditionError("InputSignal::table: times must be strictly increasing");
    }
  }
  InputSignal s;
  s.kind_ = Kind::kTable;
  s.table_t_ = std::move(times);
  s.table_u_ = std::move(values);
  return s;
}

void InputSignal::eval(double t, Eigen::Ref<Vector> u) const {
  switch (kind_) {
    case Kind::kZero:
      u.setZero();
      return;
    case Kind::kChirp:
      u.setConstant(std::sin(param_ * t * t));
      return;
    case Kind::kHarmonic:
      u.setConstant(std::sin(param_ * t));
      return;
    case Kind::kTable:
      break;
  }
  if (table_u_.cols() != 1 && table_u_.cols() != u.size()) {
    throw DimensionError("InputSignal: table width does not match the number of inputs");
  }
  const auto it = std::upper_bound(table_t_.begin(), table_t_.end(), t);
  Vector row;
  if (it == table_t_.begin()) {
    row = table_u_.row(0).transpose();
  } else if (it == table_t_.end()) {
    row = table_u_.row(table_u_.rows() - 1).transpose();
  } else {
    const Index i = static_cast<Index>(it - table_t_.begin());
    const double w = (t - table_t_[i - 1]) / (table_t_[i] - table_t_[i - 1]);
    row = ((1.0 - w) * table_u_.row(i - 1) + w * table_u_.row(i)).transpose();
  }
  if (row.size() == 1) {
    u.setConstant(row(0));
  } else {
    u = row;
  }
}

Vector InputSignal::operator()(double t, Index n_in) const {
  Vector u(n_in);
  eval(t, u);
  return u;
}

Vector eval_input(const InputSignal& signal, double t, Index n_in) { return signal(t, n_in); }

void rhs_rom(const ReducedModel& rom, double /*t*/, const Eigen::Ref<const Vector>& x,
             const Eigen::Ref<const Vector>& u, Eigen::Ref<Vector> dx) {
  const Index k = rom.r() - 1;
  if (x.size() != k + 1 || dx.size() != k + 1 || u.size() != rom.n_in()) {
    throw DimensionError("rhs_rom: dimension mismatch");
  }
  const auto& kt = kernels::active_table();
  kt.gemv(sz(k), sz(k), rom.A_star.data(), sz(rom.A_star.outerStride()), x.data(), dx.data(),
          false);
  double last = -rom.epsilon_rom * x(k);
  for (Index j = 0; j < rom.n_in(); ++j) {
    if (u(j) == 0.0) continue;
    kt.axpy(u(j), rom.B_star.col(j).data(), dx.data(), sz(k));
    last += u(j) * rom.N_star.row(j).dot(x.head(k));
  }
  last += kt.quadratic_form(sz(k), rom.S_star.data(), sz(rom.S_star.outerStride()), x.data());
  dx(k) = last;
}

// ---------------------------------------------------------------------------

Trajectory integrate_adaptive(const OdeRhs& f, const Vector& x0, double t0, double t1,
                              const AdaptiveOptions& opts, const OutputMap& output,
                              AdaptiveStats* stats) {
  if (!(opts.rtol > 0.0) || !(opts.atol > 0.0)) {
    throw PreconditionError("integrate_adaptive: rtol and atol must be positive");
  }
  if (!(t1 > t0)) throw PreconditionError("integrate_adaptive: t1 must exceed t0");
  for (std::size_t i = 0; i < opts.t_eval.size(); ++i) {
    const double te = opts.t_eval[i];
    if (te < t0 || te > t1 || (i > 0 && !(te > opts.t_eval[i - 1]))) {
      throw PreconditionError("integrate_adaptive: t_eval must be increasing inside [t0, t1]");
    }
  }

  const Index n = x0.size();
  const double span = t1 - t0;
  const double max_step = opts.max_step > 0.0 ? std::min(opts.max_step, span) : span / 10.0;
  AdaptiveStats st;
  Trajectory traj;
  std::vector<Vector> rows;

  Stepper rk(f, n);
  Vector y = x0;
  Vector y_new(n), err(n), dense_out(n);
  f(t0, y, rk.k[0]);
  ++st.rhs_evals;

  const bool every_step = opts.t_eval.empty();
  std::size_t next_out = 0;
  if (every_step) {
    append_output(traj, t0, y, output, opts.store_states, rows);
  } else {
    while (next_out < opts.t_eval.size() && opts.t_eval[next_out] == t0) {
      append_output(traj, t0, y, output, opts.store_states, rows);
      ++next_out;
    }
  }

  double h = opts.initial_step > 0.0
                 ? std::min(opts.initial_step, max_step)
                 : initial_step(f, t0, y, rk.k[0], opts.rtol, opts.atol, max_step, st.rhs_evals);
  double err_old = 1e-4;
  bool last_rejected = false;
  double t = t0;
  const double tiny = std::numeric_limits<double>::epsilon();

  while (t < t1) {
    if (st.accepted + st.rejected >= opts.max_steps) {
      throw NumericalError("integrate_adaptive: step limit reached at t = " + std::to_string(t));
    }
    if (h < 10.0 * tiny * std::max(std::abs(t), 1.0)) {
      throw NumericalError("integrate_adaptive: step size underflow at t = " + std::to_string(t) +
                           " (problem too stiff for an explicit method?)");
    }
    double h_step = h;
    bool final_step = false;
    if (t + h_step >= t1 || t1 - (t + h_step) < 10.0 * tiny * std::abs(t1)) {
      h_step = t1 - t;
      final_step = true;
    }

    rk.step(t, y, h_step, y_new, st.rhs_evals);
    rk.error_estimate(h_step, err);
    double e = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double sc = opts.atol + opts.rtol * std::max(std::abs(y(i)), std::abs(y_new(i)));
      e = std::max(e, std::abs(err(i)) / sc);
    }
    if (!std::isfinite(e)) {
      ++st.rejected;
      h = h_step * kMinFactor;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(e, kAlpha);
    if (e <= 1.0) {
      const double t_new = final_step ? t1 : t + h_step;
      if (every_step) {
        append_output(traj, t_new, y_new, output, opts.store_states, rows);
      } else {
        while (next_out < opts.t_eval.size() && opts.t_eval[next_out] <= t_new) {
          const double te = opts.t_eval[next_out];
          if (te == t_new) {
            append_output(traj, te, y_new, output, opts.store_states, rows);
          } else {
            rk.dense(y, h_step, (te - t) / h_step, dense_out);
            append_output(traj, te, dense_out, output, opts.store_states, rows);
          }
          ++next_out;
        }
      }
      double fac = fac11 / std::pow(err_old, kBeta);
      fac = std::clamp(fac / kSafety, 1.0 / kMaxFactor, 1.0 / kMinFactor);
      double h_new = h_step / fac;
      if (last_rejected) h_new = std::min(h_new, h_step);
      err_old = std::max(e, 1e-4);
      t = t_new;
      y.swap(y_new);
      rk.k[0].swap(rk.k[6]);
      ++st.accepted;
      last_rejected = false;
      h = std::min(h_new, max_step);
    } else {
      h = h_step / std::min(1.0 / kMinFactor, fac11 / kSafety);
      ++st.rejected;
      last_rejected = true;
    }
  }

  traj.output = stack_rows(rows);
  if (stats) *stats = st;
  return traj;
}

Vector integrate_rk_fixed(const OdeRhs& f, const Vector& x0, double t0, double t1, long num_steps,
                          bool embedded) {
  if (num_steps < 1) throw PreconditionError("integrate_rk_fixed: num_steps must be >= 1");
  const Index n = x0.size();
  const double h = (t1 - t0) / static_cast<double>(num_steps);
  Stepper rk(f, n);
  Vector y = x0, y_new(n);
  long evals = 0;
  f(t0, y, rk.k[0]);
  for (long s = 0; s < num_steps; ++s) {
    const double t = t0 + static_cast<double>(s) * h;
    rk.step(t, y, h, y_new, evals);
    if (embedded) {
      y_new = y;
      for (int j = 0; j < 7; ++j) y_new.noalias() += (h * kB4[j]) * rk.k[j];
      f(t + h, y_new, rk.k[6]);
    }
    y.swap(y_new);
    rk.k[0].swap(rk.k[6]);
  }
  return y;
}

// ---------------------------------------------------------------------------

namespace {

// Steps x' = A x + B u with the trapezoidal rule and calls
// visit(k, t_k, x_k, u_k) for k = 0..num_steps.
template <typename Visit>
void trapezoid_linear(const Matrix& a, const Matrix& b, const Vector& x0, const InputSignal& u,
                      double t_end, long num_steps, Visit&& visit) {
  if (num_steps < 1) throw PreconditionError("integrate_trapezoidal: num_steps must be >= 1");
  if (!(t_end > 0.0)) throw PreconditionError("integrate_trapezoidal: t_end must be positive");
  const Index n = a.rows();
  const double h = t_end / static_cast<double>(num_steps);
  const Matrix stage = Matrix::Identity(n, n) - 0.5 * h * a;
  const Eigen::PartialPivLU<Matrix> lu(stage);
  // PartialPivLU does not report singularity; check the pivots directly.
  const Vector piv = lu.matrixLU().diagonal().cwiseAbs();
  if (n > 0 && piv.minCoeff() <= 1e3 * std::numeric_limits<double>::epsilon() * piv.maxCoeff()) {
    throw NumericalError("integrate_trapezoidal: singular stage matrix I - h/2 A");
  }
  const Matrix explicit_part = Matrix::Identity(n, n) + 0.5 * h * a;

  Vector x = x0;
  Vector u_prev = u(0.0, b.cols());
  visit(0L, 0.0, x, u_prev);
  Vector rhs(n);
  for (long s = 1; s <= num_steps; ++s) {
    const double t = s == num_steps ? t_end : static_cast<double>(s) * h;
    const Vector u_next = u(t, b.cols());
    rhs.noalias() = explicit_part * x;
    if (!u.is_zero()) rhs.noalias() += (0.5 * h) * (b * (u_prev + u_next));
    x = lu.solve(rhs);
    visit(s, t, x, u_next);
    u_prev = u_next;
  }
}

Trajectory make_trajectory(long num_steps, Index width) {
  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(num_steps + 1));
  traj.output.resize(num_steps + 1, width);
  return traj;
}

// Trapezoidal update of the scalar state x_r' = -eps x_r + q(t), where
// q = sum_j u_j (n_j . xs) + xs^T S xs is taken at both step ends.
template <typename Q>
Trajectory trapezoid_quadratic(const Matrix& a, const Matrix& b, const Vector& xs0, double xr0,
                               double eps, double out_scale, const InputSignal& u, double t_end,
                               long num_steps, Q&& q) {
  Trajectory traj = make_trajectory(num_steps, 1);
  const double h = t_end / static_cast<double>(num_steps);
  const double decay = (1.0 - 0.5 * h * eps) / (1.0 + 0.5 * h * eps);
  const double gain = 0.5 * h / (1.0 + 0.5 * h * eps);
  double xr = xr0;
  double q_prev = 0.0;
  trapezoid_linear(a, b, xs0, u, t_end, num_steps,
                   [&](long k, double t, const Vector& xs, const Vector& uk) {
                     const double q_now = q(xs, uk);
                     if (k > 0) xr = decay * xr + gain * (q_prev + q_now);
                     q_prev = q_now;
                     traj.times.push_back(t);
                     traj.output(k, 0) = out_scale * xr;
                   });
  return traj;
}

}  // namespace

Trajectory integrate_trapezoidal(const LtiQuadraticSystem& sys, const InputSignal& u, double t_end,
                                 long num_steps) {
  Trajectory traj = make_trajectory(num_steps, 1);
  trapezoid_linear(sys.A(), sys.B(), sys.x0(), u, t_end, num_steps,
                   [&](long k, double t, const Vector& x, const Vector&) {
                     traj.times.push_back(t);
                     traj.output(k, 0) = sys.output(x);
                   });
  return traj;
}

Trajectory integrate_trapezoidal(const MimoLinearSystem& sys, const InputSignal& u, double t_end,
                                 long num_steps) {
  Trajectory traj = make_trajectory(num_steps, sys.num_outputs());
  trapezoid_linear(sys.A(), sys.B(), sys.x0(), u, t_end, num_steps,
                   [&](long k, double t, const Vector& x, const Vector&) {
                     traj.times.push_back(t);
                     traj.output.row(k) = sys.outputs(x).transpose();
                   });
  return traj;
}

Trajectory integrate_trapezoidal(const QuadraticBilinearSystem& sys, const InputSignal& u,
                                 double t_end, long num_steps) {
  const Index n = sys.n();
  return trapezoid_quadratic(
      sys.A_core(), sys.B_core(), sys.x0_aug().head(n), sys.x0_aug()(n), sys.epsilon(), 1.0, u,
      t_end, num_steps, [&](const Vector& x, const Vector& uk) {
        double q = eval_quadratic_output(x, sys.S());
        for (Index j = 0; j < sys.n_in(); ++j) {
          if (uk(j) != 0.0) q += uk(j) * sys.bilinear_rows().row(j).dot(x);
        }
        return q;
      });
}

Trajectory integrate_trapezoidal(const ReducedModel& rom, const InputSignal& u, double t_end,
                                 long num_steps) {
  const Index k = rom.r() - 1;
  return trapezoid_quadratic(
      rom.A_star, rom.B_star, rom.x0.head(k), rom.x0(k), rom.epsilon_rom, rom.output_scale(), u,
      t_end, num_steps, [&](const Vector& x, const Vector& uk) {
        double q = eval_quadratic_output(x, rom.S_star);
        for (Index j = 0; j < rom.n_in(); ++j) {
          if (uk(j) != 0.0) q += uk(j) * rom.N_star.row(j).dot(x);
        }
        return q;
      });
}

// ---------------------------------------------------------------------------

namespace {

OdeRhs linear_rhs(const Matrix& a, const Matrix& b, const InputSignal& u) {
  return [&a, &b, &u](double t, const Vector& x, Vector& dx) {
    const auto& kt = kernels::active_table();
    kt.gemv(sz(a.rows()), sz(a.cols()), a.data(), sz(a.rows()), x.data(), dx.data(), false);
    if (u.is_zero()) return;
    const Vector ut = u(t, b.cols());
    for (Index j = 0; j < b.cols(); ++j) {
      if (ut(j) != 0.0) kt.axpy(ut(j), b.col(j).data(), dx.data(), sz(a.rows()));
    }
  };
}

}  // namespace

Trajectory simulate(const LtiQuadraticSystem& sys, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts) {
  return integrate_adaptive(linear_rhs(sys.A(), sys.B(), u), sys.x0(), 0.0, t_end, opts,
                            [&sys](const Vector& x) { return Vector::Constant(1, sys.output(x)); });
}

Trajectory simulate(const MimoLinearSystem& sys, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts) {
  return integrate_adaptive(linear_rhs(sys.A(), sys.B(), u), sys.x0(), 0.0, t_end, opts,
                            [&sys](const Vector& x) { return sys.outputs(x); });
}

Trajectory simulate(const QuadraticBilinearSystem& sys, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts) {
  const OdeRhs f = [&sys, &u](double t, const Vector& x, Vector& dx) {
    sys.rhs(x, u(t, sys.n_in()), dx);
  };
  const Index idx = sys.output_index();
  return integrate_adaptive(f, sys.x0_aug(), 0.0, t_end, opts,
                            [idx](const Vector& x) { return Vector::Constant(1, x(idx)); });
}

Trajectory simulate(const ReducedModel& rom, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts) {
  const OdeRhs f = [&rom, &u](double t, const Vector& x, Vector& dx) {
    rhs_rom(rom, t, x, u(t, rom.n_in()), dx);
  };
  return integrate_adaptive(f, rom.x0, 0.0, t_end, opts,
                            [&rom](const Vector& x) { return Vector::Constant(1, rom.output(x)); });
}

Vector recombined_output(const MimoLinearSystem& sys, const Trajectory& traj) {
  if (traj.output.cols() != sys.num_outputs()) {
    throw DimensionError("recombined_output: trajectory width != number of outputs");
  }
  Vector y(traj.size());
  for (Index k = 0; k < traj.size(); ++k) y(k) = sys.recombine(traj.output.row(k).transpose());
  return y;
}

// ---------------------------------------------------------------------------

ErrorMetrics error_metrics(const std::vector<double>& times, const Eigen::Ref<const Vector>& y_ref,
                           const Eigen::Ref<const Vector>& y, double floor) {
  const Index m = static_cast<Index>(times.size());
  if (y_ref.size() != m || y.size() != m) {
    throw DimensionError("error_metrics: outputs must share the reference time grid");
  }
  ErrorMetrics out;
  if (m == 0) return out;
  std::vector<char> valid(times.size());
  Vector rel(m);
  for (Index k = 0; k < m; ++k) {
    const double d = std::abs(y(k) - y_ref(k));
    out.e_abs = std::max(out.e_abs, d);
    valid[k] = std::abs(y_ref(k)) >= floor;
    if (!valid[k]) {
      ++out.excluded_points;
      rel(k) = 0.0;
    } else {
      rel(k) = d / std::abs(y_ref(k));
    }
  }
  const double span = times.back() - times.front();
  if (m < 2 || span <= 0.0) {
    out.e_rel = valid[0] ? rel(0) : 0.0;
    return out;
  }
  double integral = 0.0;
  for (Index k = 1; k < m; ++k) {
    if (valid[k - 1] && valid[k]) {
      integral += 0.5 * (times[k] - times[k - 1]) * (rel(k - 1) + rel(k));
    }
  }
  out.e_rel = integral / span;
  return out;
}

ErrorMetrics error_metrics(const Trajectory& ref, const Trajectory& approx, double floor) {
  if (ref.size() != approx.size()) {
    throw DimensionError("error_metrics: trajectories have different lengths");
  }
  for (Index k = 0; k < ref.size(); ++k) {
    const double a = ref.times[k], b = approx.times[k];
    if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) {
      throw DimensionError("error_metrics: trajectories are sampled on different grids");
    }
  }
  return error_metrics(ref.times, ref.y(), approx.y(), floor);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Index m = traj.output.cols();
  out << "t";
  if (m == 1) {
    out << ",y";
  } else {
    for (Index j = 0; j < m; ++j) out << ",y" << (j + 1);
  }
  out << '\n';
  std::ostringstream line;
  line.precision(17);
  for (Index k = 0; k < traj.size(); ++k) {
    line.str("");
    line << traj.times[k];
    for (Index j = 0; j < m; ++j) line << ',' << traj.output(k, j);
    out << line.str() << '\n';
  }
}

}  // namespace qbmor
