// qbmor command-line front end.
//
//   qbmor generate --generator random_definite --n 200 --seed 1 --out sys/
//   qbmor reduce   --system sys/ --method qb_direct --r 20 --out rom/
//   qbmor simulate --system sys/ --out y.csv          (or --rom rom/)
//   qbmor sweep    --config run.json --out run/
//   qbmor check    --system sys/

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "qbmor/balancing.hpp"
#include "qbmor/errors.hpp"
#include "qbmor/experiments.hpp"
#include "qbmor/lyapunov.hpp"
#include "qbmor/report.hpp"
#include "qbmor/simulate.hpp"
#include "qbmor/system_io.hpp"
#include "qbmor/transform.hpp"

namespace fs = std::filesystem;
using namespace qbmor;

namespace {

struct InputArgs {
  std::string kind = "chirp";
  double k0 = 0.1;
  double omega = 1.0;

  InputSignal signal() const {
    if (kind == "chirp") return InputSignal::chirp(k0);
    if (kind == "harmonic") return InputSignal::harmonic(omega);
    if (kind == "zero") return InputSignal::zero();
    throw PreconditionError("unknown input kind \"" + kind + "\"");
  }
};

void add_input_options(CLI::App* app, InputArgs& in) {
  app->add_option("--input", in.kind, "Input signal: chirp, harmonic or zero")
      ->check(CLI::IsMember({"chirp", "harmonic", "zero"}));
  app->add_option("--k0", in.k0, "Chirp rate: u = sin(k0 t^2)");
  app->add_option("--omega", in.omega, "Harmonic frequency: u = sin(omega t)");
}

int run_generate(const std::string& generator, Index n, Index n_in, std::uint64_t seed,
                 double stiffness, double damping, const fs::path& out) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.n_in = n_in;
  cfg.seed = seed;
  cfg.msd_stiffness = stiffness;
  cfg.msd_damping = damping;
  cfg.r_list.clear();
  if (generator == "random_definite") {
    cfg.generator = Generator::kRandomDefinite;
  } else if (generator == "random_indefinite") {
    cfg.generator = Generator::kRandomIndefinite;
  } else {
    cfg.generator = Generator::kMsdChain;
  }
  const LtiQuadraticSystem sys = build_system(cfg);
  save_system(out, sys);
  std::cout << "wrote " << out.string() << " (n = " << sys.n() << ", n_in = " << sys.n_in()
            << ", spectral abscissa = " << format_double(sys.spectral_abscissa()) << ")\n";
  return 0;
}

int run_reduce(const fs::path& system_dir, const std::string& method_name, Index r,
               double epsilon, double epsilon_rom, const AdiSettings& adi, const fs::path& out) {
  const LtiQuadraticSystem sys = load_system(system_dir);
  const Method method = parse_method(method_name);
  fs::create_directories(out);
  std::vector<std::string> files;
  nlohmann::json meta = {{"method", method_name}, {"n", sys.n()}, {"r", r}, {"epsilon", epsilon}};

  if (method == Method::kLinearDirect) {
    const SquareRootSvd svd =
        square_root_svd(symmetric_factor(reachability_gramian(sys)),
                        symmetric_factor(linear_observability_gramian(sys)));
    const LtiQuadraticSystem rom = reduce_linear(sys, linear_balance(svd, r));
    save_system(out / "rom", rom);
    std::ofstream sv(out / "sv.csv");
    write_sv_csv(sv, {SingularValueSet{method, svd.sigma}});
  } else {
    const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, epsilon);
    const QbFactors f = method == Method::kQbDirect
                            ? qb_direct_factors(qb, reachability_gramian(sys))
                            : qb_adi_factors(qb, compute_shifts(sys.A()), r, adi);
    const SquareRootSvd svd = square_root_svd(f.L_P, f.L_Q);
    const ReducedModel rom = reduce(qb, balance(svd, f.p_doubleprime, epsilon, r), epsilon_rom);
    save_rom(out / "rom", rom);
    std::ofstream sv(out / "sv.csv");
    write_sv_csv(sv, {SingularValueSet{method, qb_singular_values(svd.sigma, f.p_doubleprime,
                                                                  epsilon)}});
    meta["p_doubleprime"] = f.p_doubleprime;
    meta["epsilon_rom"] = epsilon_rom;
  }
  files.push_back("sv.csv");
  {
    std::ofstream m(out / "sv.json");
    m << meta.dump(2) << '\n';
  }
  files.push_back("sv.json");
  write_manifest(out, meta.dump(), files);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int run_simulate(const std::optional<fs::path>& system_dir, const std::optional<fs::path>& rom_dir,
                 const InputArgs& in, double t_end, double rtol, double atol, long trapezoid_steps,
                 const fs::path& out) {
  const InputSignal u = in.signal();
  AdaptiveOptions opts;
  opts.rtol = rtol;
  opts.atol = atol;
  Trajectory traj;
  if (rom_dir) {
    // Accept either the model directory or the output directory of `reduce`.
    const fs::path dir = fs::exists(*rom_dir / "rom") ? *rom_dir / "rom" : *rom_dir;
    if (fs::exists(dir / "rom.json")) {
      const ReducedModel rom = load_rom(dir);
      if (trapezoid_steps > 0) {
        traj = integrate_trapezoidal(rom, u, t_end, trapezoid_steps);
      } else {
        traj = simulate(rom, u, t_end, opts);
      }
    } else {
      const LtiQuadraticSystem rom = load_system(dir);
      traj = trapezoid_steps > 0 ? integrate_trapezoidal(rom, u, t_end, trapezoid_steps)
                                 : simulate(rom, u, t_end, opts);
    }
  } else {
    const LtiQuadraticSystem sys = load_system(*system_dir);
    traj = trapezoid_steps > 0 ? integrate_trapezoidal(sys, u, t_end, trapezoid_steps)
                               : simulate(sys, u, t_end, opts);
  }
  std::ofstream f(out);
  if (!f) throw FormatError("cannot write " + out.string());
  write_trajectory_csv(f, traj);
  std::cout << "wrote " << traj.size() << " samples to " << out.string() << "\n";
  return 0;
}

int run_sweep(const fs::path& config_file, const fs::path& out) {
  const ExperimentConfig cfg = load_config(config_file);
  const ExperimentReport report = run_reduction(cfg);
  write_report(out, cfg, report);
  Index failures = 0;
  for (const auto& c : report.cells) {
    if (c.ok) {
      std::printf("%-14s r=%-4ld E_abs=%.3e E_rel=%.3e\n", to_string(c.method).c_str(),
                  static_cast<long>(c.r), c.e_abs, c.e_rel);
    } else {
      ++failures;
      std::printf("%-14s r=%-4ld FAILED: %s\n", to_string(c.method).c_str(),
                  static_cast<long>(c.r), c.failure.c_str());
    }
  }
  std::cout << "wrote " << out.string() << " (" << failures << " failed cells)\n";
  return 0;
}

// Invariant suite on a stored system; one line per check.
int run_check(const fs::path& system_dir, double epsilon) {
  int failed = 0;
  const auto report = [&failed](const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!ok) ++failed;
  };
  const LtiQuadraticSystem sys = load_system(system_dir);
  report("stability", sys.spectral_abscissa() < 0.0,
         "abscissa " + format_double(sys.spectral_abscissa()));
  report("output matrix symmetric", sys.M() == sys.M().transpose(), "");

  const IndefiniteSplit split = split_indefinite(sys.M());
  const double split_err =
      (split.plus * split.plus.transpose() - split.minus * split.minus.transpose() - sys.M())
          .norm() /
      std::max(sys.M().norm(), 1e-300);
  report("indefinite split", split_err <= 1e-10, "relative error " + format_double(split_err));

  const QuadraticBilinearSystem qb = to_quadratic_bilinear(sys, epsilon);
  const Matrix p = reachability_gramian(sys);
  const double res_p = lyapunov_residual(sys.A(), p, sys.B() * sys.B().transpose());
  report("reachability Gramian residual", res_p <= 1e-8, format_double(res_p));
  const QbFactors f = qb_direct_factors(qb, p);
  report("p'' nonnegative", f.p_doubleprime >= 0.0, format_double(f.p_doubleprime));

  const Matrix pt = reachability_residual(qb, p, f.p_doubleprime / (2.0 * epsilon));
  const double scale = std::max(1.0, (sys.B() * sys.B().transpose()).norm());
  report("quadratic reachability residual", pt.norm() / scale <= 1e-8,
         format_double(pt.norm() / scale));

  // Short simulation: QB state n+1 against the quadratic output.
  AdaptiveOptions opts;
  const double t_end = 10.0;
  const Trajectory y = simulate(sys, InputSignal::chirp(0.1), t_end, opts);
  opts.t_eval = y.times;
  const Trajectory yq = simulate(qb.with_epsilon(0.0), InputSignal::chirp(0.1), t_end, opts);
  const double diff = (y.y() - yq.y()).cwiseAbs().maxCoeff();
  const double bound = 10.0 * (opts.atol + opts.rtol * y.y().cwiseAbs().maxCoeff());
  report("QB output equals quadratic output", diff <= bound, "max diff " + format_double(diff));
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balanced truncation for linear systems with quadratic output"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Write a generated test system to a directory");
  std::string generator = "random_definite";
  Index n = 200, n_in = 1;
  std::uint64_t seed = 0;
  double stiffness = 1.0, damping = 0.1;
  fs::path gen_out;
  gen->add_option("--generator", generator)
      ->check(CLI::IsMember({"random_definite", "random_indefinite", "msd_chain"}));
  gen->add_option("--n", n, "State dimension (msd_chain: twice the number of masses)");
  gen->add_option("--n-in", n_in, "Number of inputs");
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("--stiffness", stiffness);
  gen->add_option("--damping", damping);
  gen->add_option("--out", gen_out, "Output directory")->required();

  // reduce
  auto* red = app.add_subcommand("reduce", "Reduce a stored system");
  fs::path red_system, red_out;
  std::string method = "qb_direct";
  Index r = 20;
  double epsilon = 1e-8, epsilon_rom = 0.0;
  AdiSettings adi;
  red->add_option("--system", red_system)->required()->check(CLI::ExistingDirectory);
  red->add_option("--method", method)
      ->check(CLI::IsMember({"linear_direct", "qb_direct", "qb_adi"}));
  red->add_option("--r", r, "Reduced order");
  red->add_option("--epsilon", epsilon, "Stabilization parameter");
  red->add_option("--epsilon-rom", epsilon_rom, "Decay of the reduced output state");
  red->add_option("--k-p-extra", adi.k_p_extra, "ADI: extra steps for Z_P beyond r");
  red->add_option("--j-q", adi.j_q, "ADI: steps for Z_Q");
  red->add_option("--out", red_out)->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a stored system or reduced model");
  std::optional<fs::path> sim_system, sim_rom;
  fs::path sim_out;
  InputArgs sim_in;
  double t_end = 100.0, rtol = 1e-6, atol = 1e-8;
  long steps = 0;
  auto* opt_sys = sim->add_option("--system", sim_system)->check(CLI::ExistingDirectory);
  auto* opt_rom = sim->add_option("--rom", sim_rom)->check(CLI::ExistingDirectory);
  opt_sys->excludes(opt_rom);
  add_input_options(sim, sim_in);
  sim->add_option("--t-end", t_end);
  sim->add_option("--rtol", rtol);
  sim->add_option("--atol", atol);
  sim->add_option("--trapezoidal-steps", steps, "Use the trapezoidal rule with this many steps");
  sim->add_option("--out", sim_out)->required();

  // sweep
  auto* swp = app.add_subcommand("sweep", "Run a configured reduction sweep");
  fs::path swp_config, swp_out;
  swp->add_option("--config", swp_config)->required()->check(CLI::ExistingFile);
  swp->add_option("--out", swp_out)->required();

  // check
  auto* chk = app.add_subcommand("check", "Run the invariant suite on a stored system");
  fs::path chk_system;
  double chk_eps = 1e-8;
  chk->add_option("--system", chk_system)->required()->check(CLI::ExistingDirectory);
  chk->add_option("--epsilon", chk_eps);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(generator, n, n_in, seed, stiffness, damping, gen_out);
    if (red->parsed()) return run_reduce(red_system, method, r, epsilon, epsilon_rom, adi, red_out);
    if (sim->parsed()) {
      if (!sim_system && !sim_rom) {
        std::cerr << "simulate: one of --system or --rom is required\n";
        return 2;
      }
      return run_simulate(sim_system, sim_rom, sim_in, t_end, rtol, atol, steps, sim_out);
    }
    if (swp->parsed()) return run_sweep(swp_config, swp_out);
    if (chk->parsed()) return run_check(chk_system, chk_eps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
