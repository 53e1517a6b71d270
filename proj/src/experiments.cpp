#include "qbmor/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "qbmor/errors.hpp"
#include "qbmor/system_io.hpp"
#include "qbmor/transform.hpp"

namespace qbmor {

namespace {

using nlohmann::json;

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

// ---------------------------------------------------------------------------

LtiQuadraticSystem generate_random_system(Index n, std::uint64_t seed, Definiteness definiteness,
                                          Index n_in) {
  if (n < 2) throw PreconditionError("generate_random_system: n must be at least 2");
  if (n_in < 1 || n_in > n) throw PreconditionError("generate_random_system: need 1 <= n_in <= n");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  Matrix a(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) a(i, j) = gauss(rng);
  const double gamma = Eigen::EigenSolver<Matrix>(a, false).eigenvalues().real().maxCoeff();
  double shift = std::ceil(gamma);
  if (shift == gamma) shift += 1.0;  // keep the abscissa strictly negative
  a.diagonal().array() -= shift;

  Matrix b(n, n_in);
  b.col(0).setOnes();
  for (Index j = 1; j < n_in; ++j)
    for (Index i = 0; i < n; ++i) b(i, j) = gauss(rng);

  Matrix m;
  if (definiteness == Definiteness::kDefinite) {
    m = Matrix::Identity(n, n);
  } else {
    Matrix u(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) u(i, j) = uniform(rng);
    m = symmetrize(u);
  }
  return LtiQuadraticSystem(std::move(a), std::move(b), std::move(m));
}

LtiQuadraticSystem generate_msd_chain(Index n_masses, double stiffness, double damping,
                                      std::uint64_t seed) {
  if (n_masses < 1) throw PreconditionError("generate_msd_chain: need at least one mass");
  if (!(stiffness > 0.0) || !(damping > 0.0)) {
    throw PreconditionError("generate_msd_chain: stiffness and damping must be positive");
  }
  const Index k = n_masses;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mass_dist(0.5, 1.5);
  Vector mass(k);
  for (Index i = 0; i < k; ++i) mass(i) = mass_dist(rng);

  // Laplacian of the chain, grounded at the wall end, free at the other.
  Matrix lap = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    lap(i, i) = (i + 1 < k) ? 2.0 : 1.0;
    if (i + 1 < k) lap(i, i + 1) = lap(i + 1, i) = -1.0;
  }
  const Matrix stiff = stiffness * lap;
  const Matrix damp = damping * lap;
  const Vector inv_mass = mass.cwiseInverse();

  Matrix a = Matrix::Zero(2 * k, 2 * k);
  a.topRightCorner(k, k).setIdentity();
  a.bottomLeftCorner(k, k) = -(inv_mass.asDiagonal() * stiff);
  a.bottomRightCorner(k, k) = -(inv_mass.asDiagonal() * damp);
  Matrix b = Matrix::Zero(2 * k, 1);
  b(2 * k - 1, 0) = inv_mass(k - 1);
  Matrix m = Matrix::Zero(2 * k, 2 * k);
  m.topLeftCorner(k, k) = 0.5 * stiff;
  m.bottomRightCorner(k, k) = 0.5 * Matrix(mass.asDiagonal());
  return LtiQuadraticSystem(std::move(a), std::move(b), std::move(m));
}

// ---------------------------------------------------------------------------

std::string to_string(Generator g) {
  switch (g) {
    case Generator::kRandomDefinite:
      return "random_definite";
    case Generator::kRandomIndefinite:
      return "random_indefinite";
    case Generator::kMsdChain:
      return "msd_chain";
    case Generator::kFromFiles:
      return "from_files";
  }
  return "unknown";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kLinearDirect:
      return "linear_direct";
    case Method::kQbDirect:
      return "qb_direct";
    case Method::kQbAdi:
      return "qb_adi";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "linear_direct") return Method::kLinearDirect;
  if (name == "qb_direct") return Method::kQbDirect;
  if (name == "qb_adi") return Method::kQbAdi;
  throw FormatError("unknown method \"" + name + "\"");
}

namespace {

Generator parse_generator(const std::string& name) {
  for (Generator g : {Generator::kRandomDefinite, Generator::kRandomIndefinite,
                      Generator::kMsdChain, Generator::kFromFiles}) {
    if (to_string(g) == name) return g;
  }
  throw FormatError("unknown generator \"" + name + "\"");
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return it.key() == k; });
    if (!known) throw FormatError(std::string(where) + ": unknown key \"" + it.key() + "\"");
  }
}

InputSignal parse_input(const json& j) {
  if (!j.is_object()) throw FormatError("input: expected an object");
  const std::string kind = j.value("kind", std::string("chirp"));
  if (kind == "zero") {
    reject_unknown(j, {"kind"}, "input");
    return InputSignal::zero();
  }
  if (kind == "chirp") {
    reject_unknown(j, {"kind", "k0"}, "input");
    return InputSignal::chirp(j.value("k0", 0.1));
  }
  if (kind == "harmonic") {
    reject_unknown(j, {"kind", "omega"}, "input");
    return InputSignal::harmonic(j.at("omega").get<double>());
  }
  if (kind == "table") {
    reject_unknown(j, {"kind", "times", "values"}, "input");
    const auto times = j.at("times").get<std::vector<double>>();
    const auto rows = j.at("values").get<std::vector<std::vector<double>>>();
    if (rows.size() != times.size() || rows.empty()) {
      throw FormatError("input: table needs one row of values per time");
    }
    Matrix values(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows[0].size()) throw FormatError("input: ragged table");
      for (std::size_t c = 0; c < rows[i].size(); ++c) {
        values(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
      }
    }
    return InputSignal::table(times, values);
  }
  throw FormatError("input: unknown kind \"" + kind + "\"");
}

json input_to_json(const InputSignal& u) {
  switch (u.kind()) {
    case InputSignal::Kind::kZero:
      return {{"kind", "zero"}};
    case InputSignal::Kind::kChirp:
      return {{"kind", "chirp"}, {"k0", u.parameter()}};
    case InputSignal::Kind::kHarmonic:
      return {{"kind", "harmonic"}, {"omega", u.parameter()}};
    case InputSignal::Kind::kTable:
      break;
  }
  json rows = json::array();
  const Matrix& v = u.table_values();
  for (Index i = 0; i < v.rows(); ++i) {
    std::vector<double> row(v.cols());
    for (Index c = 0; c < v.cols(); ++c) row[static_cast<std::size_t>(c)] = v(i, c);
    rows.push_back(row);
  }
  return {{"kind", "table"}, {"times", u.table_times()}, {"values", rows}};
}

}  // namespace

std::vector<Index> default_r_list(Index n) {
  std::vector<Index> out;
  for (Index r = 5; r <= 80 && r <= n; r += 5) out.push_back(r);
  return out;
}

void ExperimentConfig::validate() const {
  if (generator != Generator::kFromFiles) {
    if (!seed) throw PreconditionError("config: generators require a seed");
    if (n < 2) throw PreconditionError("config: n must be at least 2");
    if (n_in < 1 || n_in > n) throw PreconditionError("config: need 1 <= n_in <= n");
    if (generator == Generator::kMsdChain && (n % 2 != 0 || n_in != 1)) {
      throw PreconditionError("config: msd_chain needs an even n and n_in = 1");
    }
    for (Index r : r_list) {
      if (r < 2 || r > n + 1) throw PreconditionError("config: every r must lie in [2, n + 1]");
    }
  } else if (system_dir.empty()) {
    throw PreconditionError("config: from_files needs system_dir");
  }
  if (!(epsilon > 0.0)) throw PreconditionError("config: epsilon must be positive");
  if (!(epsilon_rom >= 0.0)) throw PreconditionError("config: epsilon_rom must be >= 0");
  if (methods.empty()) throw PreconditionError("config: no methods selected");
  if (!(t_end > 0.0)) throw PreconditionError("config: t_end must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw PreconditionError("config: rtol, atol must be > 0");
  if (adi.k_p_extra < 0 || adi.j_q < 1) throw PreconditionError("config: invalid ADI counts");
}

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig cfg;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw FormatError("config: expected a JSON object");
    reject_unknown(j,
                   {"generator", "n", "n_in", "seed", "msd", "system_dir", "epsilon",
                    "epsilon_rom", "r_list", "methods", "adi", "input", "t_end", "integrator",
                    "write_trajectories"},
                   "config");
    if (j.contains("generator")) cfg.generator = parse_generator(j["generator"].get<std::string>());
    cfg.n = j.value("n", cfg.n);
    cfg.n_in = j.value("n_in", cfg.n_in);
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("msd")) {
      reject_unknown(j["msd"], {"stiffness", "damping"}, "msd");
      cfg.msd_stiffness = j["msd"].value("stiffness", cfg.msd_stiffness);
      cfg.msd_damping = j["msd"].value("damping", cfg.msd_damping);
    }
    if (j.contains("system_dir")) cfg.system_dir = j["system_dir"].get<std::string>();
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    cfg.epsilon_rom = j.value("epsilon_rom", cfg.epsilon_rom);
    if (j.contains("r_list")) {
      const json& rl = j["r_list"];
      if (rl.is_array()) {
        for (const auto& v : rl) cfg.r_list.push_back(v.get<Index>());
      } else if (rl.is_object()) {
        reject_unknown(rl, {"start", "stop", "step"}, "r_list");
        const Index start = rl.at("start").get<Index>();
        const Index stop = rl.at("stop").get<Index>();
        const Index step = rl.value("step", Index{1});
        if (step < 1) throw FormatError("r_list: step must be positive");
        for (Index r = start; r <= stop; r += step) cfg.r_list.push_back(r);
      } else {
        throw FormatError("r_list: expected an array or {start, stop, step}");
      }
    } else {
      cfg.r_list = default_r_list(cfg.n);
    }
    if (j.contains("methods")) {
      cfg.methods.clear();
      for (const auto& v : j["methods"]) cfg.methods.push_back(parse_method(v.get<std::string>()));
    }
    if (j.contains("adi")) {
      const json& a = j["adi"];
      reject_unknown(a, {"k_P_extra", "j_Q", "tol", "compress_tol"}, "adi");
      cfg.adi.k_p_extra = a.value("k_P_extra", cfg.adi.k_p_extra);
      cfg.adi.j_q = a.value("j_Q", cfg.adi.j_q);
      cfg.adi.tol = a.value("tol", cfg.adi.tol);
      cfg.adi.compress_tol = a.value("compress_tol", cfg.adi.compress_tol);
    }
    if (j.contains("input")) cfg.input = parse_input(j["input"]);
    cfg.t_end = j.value("t_end", cfg.t_end);
    if (j.contains("integrator")) {
      reject_unknown(j["integrator"], {"rtol", "atol"}, "integrator");
      cfg.rtol = j["integrator"].value("rtol", cfg.rtol);
      cfg.atol = j["integrator"].value("atol", cfg.atol);
    }
    cfg.write_trajectories = j.value("write_trajectories", cfg.write_trajectories);
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  try {
    cfg.validate();
  } catch (const PreconditionError& e) {
    throw FormatError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(to_string(m));
  json j = {
      {"generator", to_string(cfg.generator)},
      {"n", cfg.n},
      {"n_in", cfg.n_in},
      {"msd", {{"stiffness", cfg.msd_stiffness}, {"damping", cfg.msd_damping}}},
      {"system_dir", cfg.system_dir.string()},
      {"epsilon", cfg.epsilon},
      {"epsilon_rom", cfg.epsilon_rom},
      {"r_list", cfg.r_list},
      {"methods", methods},
      {"adi",
       {{"k_P_extra", cfg.adi.k_p_extra},
        {"j_Q", cfg.adi.j_q},
        {"tol", cfg.adi.tol},
        {"compress_tol", cfg.adi.compress_tol}}},
      {"input", input_to_json(cfg.input)},
      {"t_end", cfg.t_end},
      {"integrator", {{"rtol", cfg.rtol}, {"atol", cfg.atol}}},
      {"write_trajectories", cfg.write_trajectories},
  };
  if (cfg.seed) j["seed"] = *cfg.seed;
  return j.dump(2);
}

LtiQuadraticSystem build_system(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.generator) {
    case Generator::kRandomDefinite:
      return generate_random_system(cfg.n, *cfg.seed, Definiteness::kDefinite, cfg.n_in);
    case Generator::kRandomIndefinite:
      return generate_random_system(cfg.n, *cfg.seed, Definiteness::kIndefinite, cfg.n_in);
    case Generator::kMsdChain:
      return generate_msd_chain(cfg.n / 2, cfg.msd_stiffness, cfg.msd_damping, *cfg.seed);
    case Generator::kFromFiles:
      return load_system(cfg.system_dir);
  }
  throw PreconditionError("build_system: unknown generator");
}

// ---------------------------------------------------------------------------

Matrix reachability_gramian(const LtiQuadraticSystem& sys) {
  return solve_lyapunov_dense(sys.A(), sys.B() * sys.B().transpose());
}

Matrix linear_observability_gramian(const LtiQuadraticSystem& sys) {
  const IndefiniteSplit split = split_indefinite(sys.M());
  const Matrix ct_c = split.plus * split.plus.transpose() + split.minus * split.minus.transpose();
  return solve_lyapunov_dense(sys.A().transpose(), ct_c);
}

QbFactors qb_direct_factors(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p) {
  const Matrix& s = qb.S();
  const Matrix sp = s * p;
  // S P S + 4 M B B^T M; the bilinear rows are 2 B^T M.
  const Matrix f = symmetrize(sp * s + qb.bilinear_rows().transpose() * qb.bilinear_rows());
  const Matrix q = solve_lyapunov_dense(qb.A_core().transpose(), f);
  QbFactors out;
  out.p_doubleprime = compute_p_doubleprime(p, s, 0.5 * Matrix::Identity(qb.n(), qb.n()),
                                            qb.bilinear_rows().transpose());
  out.L_P = symmetric_factor(p);
  out.L_Q = symmetric_factor(q);
  return out;
}

QbFactors qb_adi_factors(const QuadraticBilinearSystem& qb, const ShiftSet& shifts, Index r,
                         const AdiSettings& settings) {
  if (r < 2) throw PreconditionError("qb_adi_factors: r must be at least 2");
  AdiOptions p_opts;
  p_opts.max_iter = static_cast<int>(r) + settings.k_p_extra;
  p_opts.tol = settings.tol;
  p_opts.kind = GramianKind::kReachability;
  const GramianFactor zp = solve_lyapunov_adi(qb.A_core(), qb.B_core(), shifts, p_opts);
  const Matrix zp_c = compress_factor(zp.Z, settings.compress_tol);

  // 2 M B is carried by the bilinear rows; observability_rhs_factor wants M
  // and B separately, so pass M = I/2 and B = (bilinear rows)^T.
  const Index n = qb.n();
  const Matrix half_identity = 0.5 * Matrix::Identity(n, n);
  const Matrix mb2 = qb.bilinear_rows().transpose();
  const Index k_prime = std::min<Index>(r, zp_c.cols());
  const Matrix zf = observability_rhs_factor(qb.S(), zp_c, half_identity, mb2, k_prime);

  AdiOptions q_opts;
  q_opts.max_iter = settings.j_q;
  q_opts.tol = settings.tol;
  q_opts.kind = GramianKind::kObservability;
  const GramianFactor zq = solve_lyapunov_adi(qb.A_core().transpose(), zf, shifts, q_opts);

  QbFactors out;
  out.L_P = zp_c;
  out.L_Q = compress_factor(zq.Z, settings.compress_tol);
  out.p_doubleprime = compute_p_doubleprime_factored(zp_c, qb.S(), half_identity, mb2);
  out.residuals_p = zp.residual_history;
  out.residuals_q = zq.residual_history;
  return out;
}

ReducedModel reduce_qb(const LtiQuadraticSystem& sys, Method method, Index r, double epsilon,
                       double epsilon_rom, const AdiSettings& settings) {
  const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, epsilon);
  QbFactors f;
  if (method == Method::kQbDirect) {
    f = qb_direct_factors(qb, reachability_gramian(sys));
  } else if (method == Method::kQbAdi) {
    f = qb_adi_factors(qb, compute_shifts(sys.A()), r, settings);
  } else {
    throw PreconditionError("reduce_qb: method must be qb_direct or qb_adi");
  }
  return reduce(qb, balance(f.L_P, f.L_Q, f.p_doubleprime, epsilon, r), epsilon_rom);
}

// ---------------------------------------------------------------------------

const CellResult* ExperimentReport::find(Method method, Index r) const {
  for (const auto& c : cells) {
    if (c.method == method && c.r == r) return &c;
  }
  return nullptr;
}

ExperimentReport run_reduction(const ExperimentConfig& cfg) {
  return run_reduction(cfg, build_system(cfg));
}

namespace {

template <typename Body>
void run_cell(ExperimentReport& report, const ExperimentConfig& cfg, Method method, Index r,
              Body&& body) {
  CellResult cell;
  cell.method = method;
  cell.r = r;
  try {
    Trajectory traj = body();
    const ErrorMetrics em = error_metrics(report.reference, traj);
    cell.ok = true;
    cell.e_abs = em.e_abs;
    cell.e_rel = em.e_rel;
    cell.excluded_points = em.excluded_points;
    if (cfg.write_trajectories) cell.trajectory = std::move(traj);
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.failure = e.what();
  }
  report.cells.push_back(std::move(cell));
}

}  // namespace

ExperimentReport run_reduction(const ExperimentConfig& cfg, const LtiQuadraticSystem& sys) {
  cfg.validate();
  ExperimentReport report;
  const auto time_phase = [&report](Method m, Index r, const char* phase, double s) {
    report.timings.push_back(PhaseTiming{m, r, phase, s});
  };
  const auto uses = [&cfg](Method m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };

  AdaptiveOptions ref_opts;
  ref_opts.rtol = cfg.rtol;
  ref_opts.atol = cfg.atol;
  report.reference = simulate(sys, cfg.input, cfg.t_end, ref_opts);
  AdaptiveOptions rom_opts = ref_opts;
  rom_opts.t_eval = report.reference.times;

  Matrix p;
  double p_seconds = 0.0;
  if (uses(Method::kLinearDirect) || uses(Method::kQbDirect)) {
    Stopwatch sw;
    p = reachability_gramian(sys);
    p_seconds = sw.seconds();
  }

  for (Method method : cfg.methods) {
    if (method == Method::kLinearDirect) {
      Stopwatch sw_lyap;
      Matrix l_p, l_q;
      try {
        const Matrix q = linear_observability_gramian(sys);
        l_p = symmetric_factor(p);
        l_q = symmetric_factor(q);
      } catch (const std::exception& e) {
        for (Index r : cfg.r_list) {
          report.cells.push_back(CellResult{method, r, false, 0, 0, 0, e.what(), {}});
        }
        continue;
      }
      time_phase(method, 0, "lyapunov", p_seconds + sw_lyap.seconds());
      Stopwatch sw_svd;
      const SquareRootSvd svd = square_root_svd(l_p, l_q);
      time_phase(method, 0, "svd", sw_svd.seconds());
      report.singular_values.push_back(SingularValueSet{method, svd.sigma});
      for (Index r : cfg.r_list) {
        run_cell(report, cfg, method, r, [&] {
          Stopwatch sw_red;
          const LtiQuadraticSystem rom = reduce_linear(sys, linear_balance(svd, r));
          time_phase(method, r, "reduce", sw_red.seconds());
          Stopwatch sw_sim;
          Trajectory traj = simulate(rom, cfg.input, cfg.t_end, rom_opts);
          time_phase(method, r, "simulate", sw_sim.seconds());
          return traj;
        });
      }
    } else if (method == Method::kQbDirect) {
      const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, cfg.epsilon);
      Stopwatch sw_lyap;
      QbFactors f;
      try {
        f = qb_direct_factors(qb, p);
      } catch (const std::exception& e) {
        for (Index r : cfg.r_list) {
          report.cells.push_back(CellResult{method, r, false, 0, 0, 0, e.what(), {}});
        }
        continue;
      }
      report.p_doubleprime = f.p_doubleprime;
      time_phase(method, 0, "lyapunov", p_seconds + sw_lyap.seconds());
      Stopwatch sw_svd;
      const SquareRootSvd svd = square_root_svd(f.L_P, f.L_Q);
      time_phase(method, 0, "svd", sw_svd.seconds());
      report.singular_values.push_back(
          SingularValueSet{method, qb_singular_values(svd.sigma, f.p_doubleprime, cfg.epsilon)});
      for (Index r : cfg.r_list) {
        run_cell(report, cfg, method, r, [&] {
          Stopwatch sw_red;
          const ReducedModel rom =
              reduce(qb, balance(svd, f.p_doubleprime, cfg.epsilon, r), cfg.epsilon_rom);
          time_phase(method, r, "reduce", sw_red.seconds());
          Stopwatch sw_sim;
          Trajectory traj = simulate(rom, cfg.input, cfg.t_end, rom_opts);
          time_phase(method, r, "simulate", sw_sim.seconds());
          return traj;
        });
      }
    } else {
      const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, cfg.epsilon);
      Stopwatch sw_shifts;
      ShiftSet shifts;
      try {
        shifts = compute_shifts(sys.A());
      } catch (const std::exception& e) {
        for (Index r : cfg.r_list) {
          report.cells.push_back(CellResult{method, r, false, 0, 0, 0, e.what(), {}});
        }
        continue;
      }
      time_phase(method, 0, "lyapunov", sw_shifts.seconds());
      Vector last_sigma;
      for (Index r : cfg.r_list) {
        run_cell(report, cfg, method, r, [&] {
          Stopwatch sw_lyap;
          const QbFactors f = qb_adi_factors(qb, shifts, r, cfg.adi);
          time_phase(method, r, "lyapunov", sw_lyap.seconds());
          Stopwatch sw_svd;
          const SquareRootSvd svd = square_root_svd(f.L_P, f.L_Q);
          time_phase(method, r, "svd", sw_svd.seconds());
          last_sigma = qb_singular_values(svd.sigma, f.p_doubleprime, cfg.epsilon);
          Stopwatch sw_red;
          const ReducedModel rom =
              reduce(qb, balance(svd, f.p_doubleprime, cfg.epsilon, r), cfg.epsilon_rom);
          time_phase(method, r, "reduce", sw_red.seconds());
          Stopwatch sw_sim;
          Trajectory traj = simulate(rom, cfg.input, cfg.t_end, rom_opts);
          time_phase(method, r, "simulate", sw_sim.seconds());
          return traj;
        });
      }
      if (last_sigma.size() > 0) report.singular_values.push_back(SingularValueSet{method, last_sigma});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

double EpsilonSensitivity::max_difference() const {
  double m = 0.0;
  for (const auto& d : differences) m = std::max(m, d.second);
  return m;
}

EpsilonSensitivity epsilon_sensitivity(const ExperimentConfig& cfg, const LtiQuadraticSystem& sys,
                                       const std::vector<double>& eps_list, Index r) {
  if (eps_list.empty()) throw PreconditionError("epsilon_sensitivity: empty eps_list");
  for (double e : eps_list) {
    if (!(e > 0.0)) throw PreconditionError("epsilon_sensitivity: every eps must be positive");
  }
  EpsilonSensitivity out;
  out.eps_list = eps_list;
  out.reference_eps = *std::min_element(eps_list.begin(), eps_list.end());

  // P, Q and p'' do not depend on eps; only the balancing does.
  const QuadraticBilinearSystem qb0 = to_quadratic_bilinear(sys, out.reference_eps);
  const QbFactors f = qb_direct_factors(qb0, reachability_gramian(sys));
  const SquareRootSvd svd = square_root_svd(f.L_P, f.L_Q);

  const auto rom_for = [&](double eps) {
    return reduce(qb0.with_epsilon(eps), balance(svd, f.p_doubleprime, eps, r), 0.0);
  };
  std::vector<ReducedModel> roms;
  for (double e : eps_list) roms.push_back(rom_for(e));  // sv-ordering checked for all first

  AdaptiveOptions opts;
  opts.rtol = cfg.rtol;
  opts.atol = cfg.atol;
  const ReducedModel ref_rom = rom_for(out.reference_eps);
  const Trajectory ref = simulate(ref_rom, cfg.input, cfg.t_end, opts);
  opts.t_eval = ref.times;
  bool reference_seen = false;
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (eps_list[i] == out.reference_eps && !reference_seen) {
      reference_seen = true;
      continue;
    }
    const Trajectory traj = simulate(roms[i], cfg.input, cfg.t_end, opts);
    out.differences.emplace_back(eps_list[i], (traj.y() - ref.y()).cwiseAbs().maxCoeff());
  }
  return out;
}

}  // namespace qbmor
