#include "qbmor/experiments.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "qbmor/errors.hpp"
#include "qbmor/transform.hpp"

namespace qbmor {
namespace {

TEST(Generators, RandomDefiniteProperties) {
  const LtiQuadraticSystem sys = generate_random_system(40, 7);
  EXPECT_EQ(sys.n(), 40);
  EXPECT_EQ(sys.M(), Matrix::Identity(40, 40));
  EXPECT_EQ(sys.B(), Matrix::Ones(40, 1));
  EXPECT_EQ(sys.x0(), Vector::Zero(40));
  // Shifted by ceil(gamma): the abscissa lands in [-1, 0).
  EXPECT_LT(sys.spectral_abscissa(), 0.0);
  EXPECT_GE(sys.spectral_abscissa(), -1.0);
}

TEST(Generators, RandomIndefiniteProperties) {
  const LtiQuadraticSystem sys = generate_random_system(30, 8, Definiteness::kIndefinite, 2);
  EXPECT_EQ(sys.n_in(), 2);
  EXPECT_EQ(sys.B().col(0), Vector::Ones(30));
  EXPECT_EQ(sys.M(), sys.M().transpose());
  EXPECT_LE(sys.M().cwiseAbs().maxCoeff(), 1.0);
  const Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(sys.M()).eigenvalues();
  EXPECT_LT(ev.minCoeff(), 0.0);
  EXPECT_GT(ev.maxCoeff(), 0.0);
}

TEST(Generators, DeterministicPerSeed) {
  const LtiQuadraticSystem a = generate_random_system(20, 5, Definiteness::kIndefinite);
  const LtiQuadraticSystem b = generate_random_system(20, 5, Definiteness::kIndefinite);
  const LtiQuadraticSystem c = generate_random_system(20, 6, Definiteness::kIndefinite);
  EXPECT_EQ(a.A(), b.A());
  EXPECT_EQ(a.M(), b.M());
  EXPECT_NE(a.A(), c.A());
  EXPECT_EQ(generate_msd_chain(5, 1.0, 0.1, 3).A(), generate_msd_chain(5, 1.0, 0.1, 3).A());
}

TEST(Generators, Preconditions) {
  EXPECT_THROW(generate_random_system(1, 1), PreconditionError);
  EXPECT_THROW(generate_random_system(5, 1, Definiteness::kDefinite, 6), PreconditionError);
  EXPECT_THROW(generate_msd_chain(0, 1.0, 0.1, 1), PreconditionError);
  EXPECT_THROW(generate_msd_chain(3, -1.0, 0.1, 1), PreconditionError);
}

TEST(MsdChain, StructureAndEnergyDecay) {
  const Index k = 6;
  const LtiQuadraticSystem sys = generate_msd_chain(k, 2.0, 0.3, 4);
  ASSERT_EQ(sys.n(), 2 * k);
  EXPECT_EQ(sys.A().topLeftCorner(k, k), Matrix::Zero(k, k));
  EXPECT_EQ(sys.A().topRightCorner(k, k), Matrix::Identity(k, k));
  EXPECT_EQ(sys.B().topRows(k), Matrix::Zero(k, 1));
  EXPECT_GT(sys.B()(2 * k - 1, 0), 0.0);
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(sys.M()).eigenvalues().minCoeff(), 0.0);
  EXPECT_LT(sys.spectral_abscissa(), 0.0);

  // Unforced, the mechanical energy never grows.
  Vector x0 = Vector::Zero(2 * k);
  x0(0) = 1.0;
  x0(k + 2) = -0.5;
  AdaptiveOptions opts;
  opts.rtol = 1e-10;
  opts.atol = 1e-12;
  const Trajectory tr = simulate(sys.with_initial_state(x0), InputSignal::zero(), 30.0, opts);
  for (Index i = 1; i < tr.size(); ++i) {
    EXPECT_LE(tr.output(i, 0), tr.output(i - 1, 0) + 1e-10);
  }
  EXPECT_LT(tr.output(tr.size() - 1, 0), tr.output(0, 0));
}

TEST(Gramians, DenseHelpersSolveTheirEquations) {
  const LtiQuadraticSystem sys = generate_random_system(12, 2, Definiteness::kIndefinite);
  const Matrix p = reachability_gramian(sys);
  EXPECT_LE((sys.A() * p + p * sys.A().transpose() + sys.B() * sys.B().transpose()).norm(),
            1e-10 * p.norm());
  const Matrix q = linear_observability_gramian(sys);
  const IndefiniteSplit s = split_indefinite(sys.M());
  const Matrix ctc = s.plus * s.plus.transpose() + s.minus * s.minus.transpose();
  EXPECT_LE((sys.A().transpose() * q + q * sys.A() + ctc).norm(), 1e-10 * q.norm());
}

TEST(Gramians, DirectFactorsMatchDefinition) {
  const LtiQuadraticSystem sys = generate_random_system(10, 3, Definiteness::kIndefinite, 2);
  const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, 1e-6);
  const Matrix p = oracle::lyap_kron(sys.A(), sys.B() * sys.B().transpose());
  const Matrix& m = sys.M();
  const Matrix s = sys.A().transpose() * m + m * sys.A();
  const Matrix f = s * p * s + 4.0 * m * sys.B() * sys.B().transpose() * m;
  const Matrix q = oracle::lyap_kron(sys.A().transpose(), 0.5 * (f + f.transpose()));
  const QbFactors fac = qb_direct_factors(qb, reachability_gramian(sys));
  EXPECT_LE(oracle::rel(fac.L_P * fac.L_P.transpose(), p), 1e-9);
  EXPECT_LE(oracle::rel(fac.L_Q * fac.L_Q.transpose(), q), 1e-9);
  const double pdp = (p * s * p * s).trace() + 4.0 * (sys.B().transpose() * m * p * m * sys.B()).trace();
  EXPECT_NEAR(fac.p_doubleprime, pdp, 1e-9 * pdp);
}

TEST(Gramians, AdiFactorsApproachDenseWithMoreSteps) {
  const LtiQuadraticSystem sys = generate_random_system(60, 4);
  const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, 1e-8);
  const Matrix p = reachability_gramian(sys);
  const QbFactors dense = qb_direct_factors(qb, p);
  const Matrix q = dense.L_Q * dense.L_Q.transpose();
  const ShiftSet shifts = compute_shifts(sys.A());

  AdiSettings fixed;
  const QbFactors f10 = qb_adi_factors(qb, shifts, 10, fixed);
  EXPECT_GE(f10.residuals_p.size(), 20u);
  EXPECT_LE(f10.residuals_p.size(), 21u);
  EXPECT_GE(f10.residuals_q.size(), 10u);
  EXPECT_LE(oracle::rel(f10.L_P * f10.L_P.transpose(), p), 1e-6);

  AdiSettings long_run;
  long_run.j_q = 40;
  const QbFactors f40 = qb_adi_factors(qb, shifts, 40, long_run);
  const double err_q10 = oracle::rel(f10.L_Q * f10.L_Q.transpose(), q);
  const double err_q40 = oracle::rel(f40.L_Q * f40.L_Q.transpose(), q);
  EXPECT_LT(err_q40, err_q10);
  EXPECT_LE(err_q40, 1e-6);
  EXPECT_NEAR(f40.p_doubleprime, dense.p_doubleprime, 1e-6 * dense.p_doubleprime);
  EXPECT_THROW(qb_adi_factors(qb, shifts, 1, fixed), PreconditionError);
}

TEST(ReduceQb, MethodsAgreeAndRejectLinear) {
  const LtiQuadraticSystem sys = generate_random_system(40, 9);
  AdiSettings settings;
  settings.j_q = 30;
  const ReducedModel d = reduce_qb(sys, Method::kQbDirect, 8, 1e-8);
  const ReducedModel a = reduce_qb(sys, Method::kQbAdi, 8, 1e-8, 0.0, settings);
  EXPECT_EQ(d.r(), 8);
  EXPECT_EQ(a.r(), 8);
  EXPECT_NEAR(a.p_doubleprime, d.p_doubleprime, 1e-6 * d.p_doubleprime);
  EXPECT_THROW(reduce_qb(sys, Method::kLinearDirect, 8, 1e-8), PreconditionError);
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : {Method::kLinearDirect, Method::kQbDirect, Method::kQbAdi}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_method("bogus"), FormatError);
  EXPECT_EQ(to_string(Generator::kMsdChain), "msd_chain");
}

TEST(Config, DefaultsAndRoundTrip) {
  const ExperimentConfig cfg =
      parse_config(R"({"generator": "random_indefinite", "n": 30, "seed": 12,
                       "methods": ["qb_direct", "qb_adi"],
                       "r_list": {"start": 4, "stop": 12, "step": 4},
                       "adi": {"j_Q": 12},
                       "input": {"kind": "harmonic", "omega": 2.5},
                       "integrator": {"rtol": 1e-7, "atol": 1e-9}})");
  EXPECT_EQ(cfg.generator, Generator::kRandomIndefinite);
  EXPECT_EQ(cfg.n, 30);
  ASSERT_TRUE(cfg.seed.has_value());
  EXPECT_EQ(*cfg.seed, 12u);
  EXPECT_EQ(cfg.r_list, (std::vector<Index>{4, 8, 12}));
  EXPECT_EQ(cfg.adi.j_q, 12);
  EXPECT_EQ(cfg.adi.k_p_extra, 10);
  EXPECT_DOUBLE_EQ(cfg.epsilon, 1e-8);
  EXPECT_EQ(cfg.input.kind(), InputSignal::Kind::kHarmonic);
  EXPECT_DOUBLE_EQ(cfg.rtol, 1e-7);

  const ExperimentConfig back = parse_config(config_to_json(cfg));
  EXPECT_EQ(config_to_json(back), config_to_json(cfg));

  const ExperimentConfig dflt = parse_config(R"({"n": 50, "seed": 1})");
  EXPECT_EQ(dflt.r_list, default_r_list(50));
  EXPECT_EQ(default_r_list(50).back(), 50);
  EXPECT_EQ(default_r_list(200).size(), 16u);
}

TEST(Config, TableInputRoundTrip) {
  const ExperimentConfig cfg = parse_config(
      R"({"n": 10, "seed": 1, "input": {"kind": "table", "times": [0, 1], "values": [[0], [2]]}})");
  EXPECT_DOUBLE_EQ(cfg.input(0.5, 1)(0), 1.0);
  const ExperimentConfig back = parse_config(config_to_json(cfg));
  EXPECT_DOUBLE_EQ(back.input(0.25, 1)(0), 0.5);
}

TEST(Config, RejectsInvalidDocuments) {
  const char* bad[] = {
      "not json",
      "[1, 2]",
      R"({"n": 10, "seed": 1, "bogus": 3})",
      R"({"n": 10})",
      R"({"n": 10, "seed": 1, "r_list": [1]})",
      R"({"n": 10, "seed": 1, "r_list": [12]})",
      R"({"n": 10, "seed": 1, "r_list": {"start": 2, "stop": 4, "step": 0}})",
      R"({"n": 10, "seed": 1, "methods": ["magic"]})",
      R"({"n": 10, "seed": 1, "epsilon": 0})",
      R"({"n": 10, "seed": 1, "input": {"kind": "square"}})",
      R"({"n": 10, "seed": 1, "adi": {"shifts": 3}})",
      R"({"generator": "msd_chain", "n": 9, "seed": 1})",
      R"({"generator": "from_files"})",
  };
  for (const char* text : bad) EXPECT_THROW(parse_config(text), FormatError) << text;
  EXPECT_THROW(load_config("/nonexistent/config.json"), FormatError);
}

TEST(RunReduction, ReportStructure) {
  ExperimentConfig cfg;
  cfg.n = 30;
  cfg.seed = 3;
  cfg.r_list = {4, 8};
  cfg.methods = {Method::kLinearDirect, Method::kQbDirect, Method::kQbAdi};
  cfg.t_end = 20.0;
  const ExperimentReport report = run_reduction(cfg);
  EXPECT_EQ(report.cells.size(), 6u);
  EXPECT_EQ(report.singular_values.size(), 3u);
  EXPECT_GT(report.p_doubleprime, 0.0);
  EXPECT_GT(report.reference.size(), 2);
  for (const CellResult& c : report.cells) {
    EXPECT_TRUE(c.ok) << to_string(c.method) << " r=" << c.r << ": " << c.failure;
    EXPECT_TRUE(c.trajectory.times.empty());
  }
  ASSERT_NE(report.find(Method::kQbDirect, 8), nullptr);
  EXPECT_EQ(report.find(Method::kQbDirect, 9), nullptr);
  EXPECT_LT(report.find(Method::kQbDirect, 8)->e_abs, report.find(Method::kQbDirect, 4)->e_abs);

  std::set<std::string> shared_phases;
  for (const PhaseTiming& t : report.timings) {
    EXPECT_GE(t.seconds, 0.0);
    if (t.r == 0) shared_phases.insert(t.phase);
  }
  EXPECT_TRUE(shared_phases.count("lyapunov"));
  EXPECT_TRUE(shared_phases.count("svd"));
}

TEST(RunReduction, FailuresAreRecordedPerCell) {
  ExperimentConfig cfg;
  cfg.n = 20;
  cfg.seed = 3;
  cfg.r_list = {4, 21};  // 21 exceeds n for the linear method
  cfg.methods = {Method::kLinearDirect};
  cfg.t_end = 5.0;
  const ExperimentReport report = run_reduction(cfg);
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_TRUE(report.cells[0].ok);
  EXPECT_FALSE(report.cells[1].ok);
  EXPECT_FALSE(report.cells[1].failure.empty());
}

TEST(RunReduction, FullOrderReproducesTheSystem) {
  // r = n + 1 (QB) and r = n (linear) are similarity transformations.
  ExperimentConfig cfg;
  cfg.n = 60;
  cfg.seed = 2;
  cfg.r_list = {60, 61};
  cfg.methods = {Method::kLinearDirect, Method::kQbDirect};
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  cfg.t_end = 50.0;
  const ExperimentReport report = run_reduction(cfg);
  const CellResult* lin = report.find(Method::kLinearDirect, 60);
  const CellResult* qb = report.find(Method::kQbDirect, 61);
  ASSERT_NE(lin, nullptr);
  ASSERT_NE(qb, nullptr);
  ASSERT_TRUE(lin->ok) << lin->failure;
  ASSERT_TRUE(qb->ok) << qb->failure;
  EXPECT_LE(lin->e_abs, 1e-6);
  EXPECT_LE(qb->e_abs, 1e-6);
}

TEST(RunReduction, DeterministicAcrossRuns) {
  ExperimentConfig cfg;
  cfg.n = 25;
  cfg.seed = 11;
  cfg.r_list = {5};
  cfg.methods = {Method::kQbDirect, Method::kQbAdi};
  cfg.t_end = 10.0;
  const ExperimentReport a = run_reduction(cfg);
  const ExperimentReport b = run_reduction(cfg);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    EXPECT_EQ(a.cells[i].e_abs, b.cells[i].e_abs);
    EXPECT_EQ(a.cells[i].e_rel, b.cells[i].e_rel);
  }
}

TEST(EpsilonSensitivity, ReducedOutputIndependentOfEpsilon) {
  ExperimentConfig cfg;
  cfg.n = 40;
  cfg.seed = 5;
  cfg.t_end = 20.0;
  const LtiQuadraticSystem sys = build_system(cfg);
  const EpsilonSensitivity es = epsilon_sensitivity(cfg, sys, {1e-4, 1e-8, 1e-6}, 8);
  EXPECT_DOUBLE_EQ(es.reference_eps, 1e-8);
  EXPECT_EQ(es.differences.size(), 2u);
  EXPECT_LE(es.max_difference(), 1e-8);
  EXPECT_THROW(epsilon_sensitivity(cfg, sys, {}, 8), PreconditionError);
  EXPECT_THROW(epsilon_sensitivity(cfg, sys, {0.0}, 8), PreconditionError);
  // Too large an eps drops the augmented value out of the leading r.
  EXPECT_THROW(epsilon_sensitivity(cfg, sys, {1e10}, 8), PreconditionError);
}

}  // namespace
}  // namespace qbmor
