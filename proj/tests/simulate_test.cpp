#include "qbmor/simulate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qbmor/errors.hpp"
#include "qbmor/transform.hpp"

namespace qbmor {
namespace {

// x' = A x with A = [[-1, 2], [-2, -1]]: decaying rotation.
Matrix rotation_a() {
  Matrix a(2, 2);
  a << -1.0, 2.0, -2.0, -1.0;
  return a;
}

Vector rotation_exact(const Vector& x0, double t) {
  Vector x(2);
  x << std::exp(-t) * (std::cos(2 * t) * x0(0) + std::sin(2 * t) * x0(1)),
      std::exp(-t) * (-std::sin(2 * t) * x0(0) + std::cos(2 * t) * x0(1));
  return x;
}

TEST(Adaptive, ExponentialDecay) {
  const OdeRhs f = [](double, const Vector& x, Vector& dx) { dx = -x; };
  AdaptiveOptions opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  AdaptiveStats stats;
  const Trajectory tr = integrate_adaptive(f, Vector::Ones(1), 0.0, 1.0, opts, {}, &stats);
  EXPECT_DOUBLE_EQ(tr.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
  EXPECT_NEAR(tr.output(tr.size() - 1, 0), std::exp(-1.0), 1e-10);
  EXPECT_GT(stats.accepted, 0);
  EXPECT_GE(stats.rhs_evals, 6 * stats.accepted);
}

TEST(Adaptive, DenseOutputMatchesClosedForm) {
  const Matrix a = rotation_a();
  Vector x0(2);
  x0 << 1.0, 0.5;
  const OdeRhs f = [&a](double, const Vector& x, Vector& dx) { dx = a * x; };
  AdaptiveOptions opts;
  opts.rtol = 1e-9;
  opts.atol = 1e-12;
  for (int k = 0; k <= 40; ++k) opts.t_eval.push_back(0.1 * k);
  opts.store_states = true;
  const Trajectory tr = integrate_adaptive(f, x0, 0.0, 4.0, opts);
  ASSERT_EQ(tr.size(), 41);
  ASSERT_EQ(tr.states.size(), 41u);
  for (Index k = 0; k < tr.size(); ++k) {
    EXPECT_LE((tr.states[k] - rotation_exact(x0, tr.times[k])).norm(), 1e-8) << tr.times[k];
  }
  EXPECT_NO_THROW(tr.validate());
}

TEST(Adaptive, OutputMapAndMaxStep) {
  const OdeRhs f = [](double, const Vector&, Vector& dx) { dx = Vector::Ones(1); };
  AdaptiveOptions opts;
  opts.max_step = 0.25;
  const OutputMap twice = [](const Vector& x) { return Vector(2.0 * x); };
  const Trajectory tr = integrate_adaptive(f, Vector::Zero(1), 0.0, 2.0, opts, twice);
  EXPECT_GE(tr.size(), 9);
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    EXPECT_LE(tr.times[k] - tr.times[k - 1], 0.25 + 1e-12);
  }
  EXPECT_NEAR(tr.output(tr.size() - 1, 0), 4.0, 1e-12);
}

TEST(Adaptive, StepUnderflowReportsTime) {
  // x' = x^2, x(0) = 1 blows up at t = 1.
  const OdeRhs f = [](double, const Vector& x, Vector& dx) { dx = x.cwiseProduct(x); };
  AdaptiveOptions opts;
  try {
    integrate_adaptive(f, Vector::Ones(1), 0.0, 2.0, opts);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("t = "), std::string::npos);
  }
}

TEST(Adaptive, RejectsBadOptions) {
  const OdeRhs f = [](double, const Vector& x, Vector& dx) { dx = -x; };
  AdaptiveOptions opts;
  opts.rtol = 0.0;
  EXPECT_THROW(integrate_adaptive(f, Vector::Ones(1), 0.0, 1.0, opts), PreconditionError);
  opts.rtol = 1e-6;
  EXPECT_THROW(integrate_adaptive(f, Vector::Ones(1), 1.0, 1.0, opts), PreconditionError);
  opts.t_eval = {0.5, 0.2};
  EXPECT_THROW(integrate_adaptive(f, Vector::Ones(1), 0.0, 1.0, opts), PreconditionError);
  opts.t_eval = {0.5, 1.5};
  EXPECT_THROW(integrate_adaptive(f, Vector::Ones(1), 0.0, 1.0, opts), PreconditionError);
}

double observed_order(const std::vector<long>& steps, const std::vector<double>& errors,
                      double span) {
  std::vector<double> lh;
  std::vector<double> le;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    lh.push_back(std::log(span / static_cast<double>(steps[i])));
    le.push_back(std::log(errors[i]));
  }
  return oracle::ls_slope(lh, le);
}

TEST(FixedRk, ObservedOrders) {
  const Matrix a = rotation_a();
  Vector x0(2);
  x0 << 1.0, 0.5;
  const OdeRhs f = [&a](double, const Vector& x, Vector& dx) { dx = a * x; };
  const std::vector<long> steps = {20, 40, 80, 160};
  std::vector<double> e5;
  std::vector<double> e4;
  for (long n : steps) {
    e5.push_back((integrate_rk_fixed(f, x0, 0.0, 4.0, n, false) - rotation_exact(x0, 4.0)).norm());
    e4.push_back((integrate_rk_fixed(f, x0, 0.0, 4.0, n, true) - rotation_exact(x0, 4.0)).norm());
  }
  EXPECT_NEAR(observed_order(steps, e5, 4.0), 5.0, 0.3);
  EXPECT_NEAR(observed_order(steps, e4, 4.0), 4.0, 0.3);
  EXPECT_THROW(integrate_rk_fixed(f, x0, 0.0, 1.0, 0), PreconditionError);
}

TEST(Trapezoidal, SecondOrderOnLinearProblem) {
  Vector x0(2);
  x0 << 1.0, 0.5;
  const LtiQuadraticSystem sys(rotation_a(), Matrix::Zero(2, 1), Matrix::Identity(2, 2), x0);
  const double exact = std::exp(-8.0) * x0.squaredNorm();
  const std::vector<long> steps = {40, 80, 160, 320};
  std::vector<double> err;
  for (long n : steps) {
    const Trajectory tr = integrate_trapezoidal(sys, InputSignal::zero(), 4.0, n);
    ASSERT_EQ(tr.size(), n + 1);
    err.push_back(std::abs(tr.output(n, 0) - exact));
  }
  EXPECT_NEAR(observed_order(steps, err, 4.0), 2.0, 0.1);
}

TEST(Trapezoidal, ForcedScalarAndQbAgree) {
  // x' = -x + 1: x = 1 - e^{-t}, y = x^2.
  const LtiQuadraticSystem sys(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0),
                               Matrix::Constant(1, 1, 1.0));
  const InputSignal one = InputSignal::table({0.0}, Matrix::Constant(1, 1, 1.0));
  const double exact = std::pow(1.0 - std::exp(-2.0), 2);
  const Trajectory fom = integrate_trapezoidal(sys, one, 2.0, 2000);
  EXPECT_NEAR(fom.output(2000, 0), exact, 1e-6);
  const Trajectory qb = integrate_trapezoidal(to_quadratic_bilinear(sys, 0.0), one, 2.0, 2000);
  EXPECT_NEAR(qb.output(2000, 0), exact, 1e-6);
  const MimoLinearSystem mimo = to_mimo_linear(sys);
  const Vector y = recombined_output(mimo, integrate_trapezoidal(mimo, one, 2.0, 2000));
  EXPECT_NEAR(y(2000), exact, 1e-6);
  EXPECT_THROW(integrate_trapezoidal(sys, one, 2.0, 0), PreconditionError);
  EXPECT_THROW(integrate_trapezoidal(sys, one, 0.0, 10), PreconditionError);
}

TEST(Trapezoidal, SingularStageMatrixThrows) {
  // I - h/2 A = 0 for A = 2/h I.
  const LtiQuadraticSystem sys(Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0),
                               Matrix::Constant(1, 1, 1.0), StabilityCheck::kAssumeStable);
  EXPECT_THROW(integrate_trapezoidal(sys, InputSignal::zero(), 1.0, 1), NumericalError);
}

TEST(Simulate, FormulationsAgreeOnSmallSystem) {
  std::mt19937_64 rng(51);
  const Index n = 8;
  const Matrix a = oracle::random_stable(n, rng, 0.5);
  const LtiQuadraticSystem sys(a, oracle::random_matrix(n, 1, rng), oracle::random_symmetric(n, rng));
  const InputSignal u = InputSignal::chirp(0.5);
  AdaptiveOptions opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  const Trajectory fom = simulate(sys, u, 10.0, opts);
  opts.t_eval = fom.times;
  const Trajectory qb = simulate(to_quadratic_bilinear(sys, 0.0), u, 10.0, opts);
  const MimoLinearSystem mimo = to_mimo_linear(sys);
  const Vector ym = recombined_output(mimo, simulate(mimo, u, 10.0, opts));
  const double scale = fom.y().cwiseAbs().maxCoeff();
  EXPECT_LE((fom.y() - qb.y()).cwiseAbs().maxCoeff(), 1e-7 * scale);
  EXPECT_LE((fom.y() - ym).cwiseAbs().maxCoeff(), 1e-9 * scale);
}

TEST(RhsRom, MatchesFormula) {
  ReducedModel rom;
  rom.A_star = Matrix(2, 2);
  rom.A_star << -1.0, 0.5, 0.0, -2.0;
  rom.B_star = Matrix(2, 1);
  rom.B_star << 1.0, -1.0;
  rom.N_star = Matrix(1, 2);
  rom.N_star << 0.3, 0.7;
  rom.S_star = Matrix(2, 2);
  rom.S_star << 2.0, 1.0, 1.0, -1.0;
  rom.p_doubleprime = 16.0;
  rom.epsilon_rom = 0.5;
  rom.x0 = Vector::Zero(3);
  Vector x(3);
  x << 1.0, 2.0, 4.0;
  Vector u(1);
  u << 3.0;
  Vector dx(3);
  rhs_rom(rom, 0.0, x, u, dx);
  EXPECT_DOUBLE_EQ(dx(0), -1.0 + 1.0 + 3.0);
  EXPECT_DOUBLE_EQ(dx(1), -4.0 - 3.0);
  // -0.5*4 + 3*(0.3 + 1.4) + (2 + 4 - 4)
  EXPECT_NEAR(dx(2), -2.0 + 5.1 + 2.0, 1e-14);
  EXPECT_DOUBLE_EQ(rom.output(x), 8.0);
  Vector bad(2);
  EXPECT_THROW(rhs_rom(rom, 0.0, bad, u, dx), DimensionError);
}

TEST(InputSignal, ClosedForms) {
  EXPECT_DOUBLE_EQ(InputSignal::chirp(0.1)(3.0, 1)(0), std::sin(0.9));
  EXPECT_DOUBLE_EQ(InputSignal::harmonic(2.0)(0.25, 1)(0), std::sin(0.5));
  const Vector z = InputSignal::zero()(1.0, 3);
  EXPECT_EQ(z, Vector::Zero(3));
  const Vector both = eval_input(InputSignal::chirp(1.0), 1.0, 2);
  EXPECT_DOUBLE_EQ(both(0), std::sin(1.0));
  EXPECT_DOUBLE_EQ(both(1), std::sin(1.0));
  EXPECT_TRUE(InputSignal::zero().is_zero());
  EXPECT_EQ(InputSignal::harmonic(2.0).kind(), InputSignal::Kind::kHarmonic);
  EXPECT_DOUBLE_EQ(InputSignal::harmonic(2.0).parameter(), 2.0);
}

TEST(InputSignal, TableInterpolatesAndHolds) {
  Matrix v(3, 2);
  v << 0.0, 10.0, 1.0, 20.0, 3.0, 40.0;
  const InputSignal s = InputSignal::table({0.0, 1.0, 2.0}, v);
  const Vector mid = s(1.5, 2);
  EXPECT_DOUBLE_EQ(mid(0), 2.0);
  EXPECT_DOUBLE_EQ(mid(1), 30.0);
  EXPECT_DOUBLE_EQ(s(-1.0, 2)(0), 0.0);
  EXPECT_DOUBLE_EQ(s(5.0, 2)(1), 40.0);
  EXPECT_THROW(s(0.5, 3), DimensionError);
  EXPECT_THROW(InputSignal::table({}, Matrix(0, 1)), PreconditionError);
  EXPECT_THROW(InputSignal::table({0.0, 0.0}, Matrix::Zero(2, 1)), PreconditionError);
  EXPECT_THROW(InputSignal::table({0.0, 1.0}, Matrix::Zero(3, 1)), DimensionError);
}

TEST(ErrorMetrics, WorkedExample) {
  const std::vector<double> t = {0.0, 1.0, 2.0};
  Vector ref(3);
  ref << 1.0, 2.0, 4.0;
  Vector y(3);
  y << 1.1, 2.0, 4.0;
  const ErrorMetrics em = error_metrics(t, ref, y);
  EXPECT_NEAR(em.e_abs, 0.1, 1e-15);
  // (1/2) * 0.5 * (0.1 + 0)
  EXPECT_NEAR(em.e_rel, 0.025, 1e-15);
  EXPECT_EQ(em.excluded_points, 0);
}

TEST(ErrorMetrics, FloorExcludesAdjacentIntervals) {
  const std::vector<double> t = {0.0, 1.0, 2.0};
  Vector ref(3);
  ref << 0.0, 1.0, 1.0;
  Vector y(3);
  y << 5.0, 1.5, 1.5;
  const ErrorMetrics em = error_metrics(t, ref, y);
  EXPECT_DOUBLE_EQ(em.e_abs, 5.0);
  EXPECT_EQ(em.excluded_points, 1);
  // Only [1, 2] counts: 0.5 * (0.5 + 0.5) / 2.
  EXPECT_NEAR(em.e_rel, 0.25, 1e-15);
  const ErrorMetrics loose = error_metrics(t, ref, y, 2.0);
  EXPECT_EQ(loose.excluded_points, 3);
  EXPECT_DOUBLE_EQ(loose.e_rel, 0.0);
}

TEST(ErrorMetrics, GridChecks) {
  Trajectory a;
  a.times = {0.0, 1.0};
  a.output = Matrix::Ones(2, 1);
  Trajectory b = a;
  b.times = {0.0, 1.5};
  EXPECT_THROW(error_metrics(a, b), DimensionError);
  Trajectory c;
  c.times = {0.0};
  c.output = Matrix::Ones(1, 1);
  EXPECT_THROW(error_metrics(a, c), DimensionError);
  EXPECT_DOUBLE_EQ(error_metrics(a, a).e_abs, 0.0);
}

TEST(TrajectoryTest, ValidateAndCsv) {
  Trajectory tr;
  tr.times = {0.0, 0.5};
  tr.output = Matrix(2, 1);
  tr.output << 1.0, 1.0 / 3.0;
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  EXPECT_EQ(out.str(), "t,y\n0,1\n0.5,0.33333333333333331\n");

  tr.output = Matrix::Zero(2, 2);
  std::ostringstream out2;
  write_trajectory_csv(out2, tr);
  EXPECT_EQ(out2.str().substr(0, 8), "t,y1,y2\n");

  Trajectory bad;
  bad.times = {0.0, 0.0};
  bad.output = Matrix::Zero(2, 1);
  EXPECT_THROW(bad.validate(), PreconditionError);
  bad.times = {0.0, 1.0};
  bad.output = Matrix::Zero(3, 1);
  EXPECT_THROW(bad.validate(), DimensionError);
}

}  // namespace
}  // namespace qbmor
