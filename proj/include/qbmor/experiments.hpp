#pragma once

// Test-system generators and the end-to-end reduction sweep: Gramians,
// balancing, reduced models for every requested r, transient simulation of
// the full and reduced models, and error metrics.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qbmor/balancing.hpp"
#include "qbmor/core.hpp"
#include "qbmor/lyapunov.hpp"
#include "qbmor/simulate.hpp"

namespace qbmor {

enum class Definiteness { kDefinite, kIndefinite };

/// A = A' - ceil(gamma) I with Gaussian A' and gamma = max Re lambda(A');
/// B = ones (further input columns Gaussian); M = I (definite) or the
/// symmetric part of a uniform [-1, 1] matrix (indefinite); x0 = 0.
LtiQuadraticSystem generate_random_system(Index n, std::uint64_t seed,
                                          Definiteness definiteness = Definiteness::kDefinite,
                                          Index n_in = 1);

/// Chain of n_masses masses (uniform in [0.5, 1.5], drawn from `seed`)
/// joined by springs and dampers, the first one attached to a wall, forced
/// at the free end. State (positions; velocities), n = 2 n_masses; the
/// output is the total mechanical energy, M = blockdiag(K/2, Mass/2).
LtiQuadraticSystem generate_msd_chain(Index n_masses, double stiffness, double damping,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------

enum class Generator { kRandomDefinite, kRandomIndefinite, kMsdChain, kFromFiles };
enum class Method { kLinearDirect, kQbDirect, kQbAdi };

std::string to_string(Generator g);
std::string to_string(Method m);
Method parse_method(const std::string& name);

struct AdiSettings {
  /// Z_P is computed with r + k_p_extra steps.
  int k_p_extra = 10;
  /// Steps for Z_Q.
  int j_q = 10;
  /// Residual stopping tolerance; <= 0 keeps the fixed step counts.
  double tol = 0.0;
  /// Relative truncation tolerance when compressing Z_P before its leading
  /// columns feed the observability equation.
  double compress_tol = 1e-12;
};

struct ExperimentConfig {
  Generator generator = Generator::kRandomDefinite;
  Index n = 200;
  Index n_in = 1;
  std::optional<std::uint64_t> seed;
  double msd_stiffness = 1.0;
  double msd_damping = 0.1;
  std::filesystem::path system_dir;

  double epsilon = 1e-8;
  double epsilon_rom = 0.0;
  std::vector<Index> r_list;
  std::vector<Method> methods = {Method::kLinearDirect, Method::kQbDirect};
  AdiSettings adi;

  InputSignal input = InputSignal::chirp(0.1);
  double t_end = 100.0;
  double rtol = 1e-6;
  double atol = 1e-8;
  bool write_trajectories = false;

  /// Throws PreconditionError for inconsistent settings.
  void validate() const;
};

/// r_list default: 5, 10, ..., 80 restricted to [2, n].
std::vector<Index> default_r_list(Index n);

/// Parses a JSON document; unknown keys are rejected. Throws FormatError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& file);
/// Canonical JSON echo with every field explicit.
std::string config_to_json(const ExperimentConfig& cfg);

/// Builds the configured full-order system.
LtiQuadraticSystem build_system(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Gramian factors of the individual methods.

/// L_P, L_Q with P ~= L_P L_P^T and Q ~= L_Q L_Q^T for the QB formulation,
/// plus p''.
struct QbFactors {
  Matrix L_P;
  Matrix L_Q;
  double p_doubleprime = 0.0;
  std::vector<double> residuals_p;  // ADI only
  std::vector<double> residuals_q;  // ADI only
};

/// Dense reachability Gramian A P + P A^T + B B^T = 0.
Matrix reachability_gramian(const LtiQuadraticSystem& sys);

/// Observability Gramian of the linear system with outputs z = (L+ L-)^T x.
Matrix linear_observability_gramian(const LtiQuadraticSystem& sys);

/// Dense QB Gramians from a dense P; Q solves A^T Q + Q A + S P S + 4 M B B^T M = 0.
QbFactors qb_direct_factors(const QuadraticBilinearSystem& qb, const Eigen::Ref<const Matrix>& p);

/// Low-rank route for truncation order r: Z_P from r + k_p_extra ADI steps,
/// compressed; its leading r columns and 2 M B form the right-hand side
/// factor for j_q ADI steps on the observability equation.
QbFactors qb_adi_factors(const QuadraticBilinearSystem& qb, const ShiftSet& shifts, Index r,
                         const AdiSettings& settings);

/// Reduced model of order r by the chosen QB method (kQbDirect or kQbAdi).
ReducedModel reduce_qb(const LtiQuadraticSystem& sys, Method method, Index r, double epsilon,
                       double epsilon_rom = 0.0, const AdiSettings& settings = {});

// ---------------------------------------------------------------------------

struct SingularValueSet {
  Method method;
  /// Descending. For the QB methods the augmented value is included and all
  /// values carry the common 1/sqrt(2 eps) factor.
  Vector sigma;
};

struct CellResult {
  Method method;
  Index r = 0;
  bool ok = false;
  double e_abs = 0.0;
  double e_rel = 0.0;
  Index excluded_points = 0;
  std::string failure;
  Trajectory trajectory;  // filled only when trajectories are requested
};

struct PhaseTiming {
  Method method;
  Index r = 0;  // 0: shared by every r of the method
  std::string phase;
  double seconds = 0.0;
};

struct ExperimentReport {
  std::vector<SingularValueSet> singular_values;
  std::vector<CellResult> cells;
  std::vector<PhaseTiming> timings;
  double p_doubleprime = 0.0;  // from the dense Gramian, when computed
  Trajectory reference;        // full-order output on its own adaptive grid

  /// Cell for (method, r) or nullptr.
  const CellResult* find(Method method, Index r) const;
};

ExperimentReport run_reduction(const ExperimentConfig& cfg);
/// Same, on an already constructed system (cfg's generator is ignored).
ExperimentReport run_reduction(const ExperimentConfig& cfg, const LtiQuadraticSystem& sys);

struct EpsilonSensitivity {
  std::vector<double> eps_list;
  double reference_eps = 0.0;  // smallest entry
  /// (eps, max_t |y_eps - y_ref|) for every other eps.
  std::vector<std::pair<double, double>> differences;

  double max_difference() const;
};

/// Reduced outputs (epsilon_rom = 0) at order r for every eps, compared in
/// max norm with the one for the smallest eps. Throws PreconditionError if
/// some eps violates the singular-value ordering condition at r.
EpsilonSensitivity epsilon_sensitivity(const ExperimentConfig& cfg, const LtiQuadraticSystem& sys,
                                       const std::vector<double>& eps_list, Index r);

}  // namespace qbmor
