#pragma once

// Time integration of the full, MIMO-linear, quadratic-bilinear and reduced
// models, input signals, and output error metrics.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qbmor/balancing.hpp"
#include "qbmor/core.hpp"

namespace qbmor {

/// Sampled solution. Row k of `output` belongs to times[k]; `states` is
/// either empty or holds one state per time.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  Matrix output;  // num_times x num_outputs

  Index size() const { return static_cast<Index>(times.size()); }
  /// Column `k` of the output as a vector.
  Vector y(Index k = 0) const { return output.col(k); }
  /// Throws DimensionError / PreconditionError on inconsistent data.
  void validate() const;
};

class InputSignal {
 public:
  enum class Kind { kZero, kChirp, kHarmonic, kTable };

  static InputSignal zero();
  /// sin(k0 t^2): instantaneous frequency growing linearly in t.
  static InputSignal chirp(double k0);
  static InputSignal harmonic(double omega);
  /// Piecewise-linear interpolation of `values` (one row per time, one
  /// column per input or a single broadcast column); held constant outside
  /// the table.
  static InputSignal table(std::vector<double> times, Matrix values);

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }
  bool is_zero() const { return kind_ == Kind::kZero; }
  const std::vector<double>& table_times() const { return table_t_; }
  const Matrix& table_values() const { return table_u_; }

  /// Value at time t for a system with n_in inputs. Scalar signals drive
  /// every input channel with the same value.
  Vector operator()(double t, Index n_in) const;
  void eval(double t, Eigen::Ref<Vector> u) const;

 private:
  InputSignal() = default;
  Kind kind_ = Kind::kZero;
  double param_ = 0.0;
  std::vector<double> table_t_;
  Matrix table_u_;
};

Vector eval_input(const InputSignal& signal, double t, Index n_in = 1);

/// dx/dt of the reduced model; the quadratic term is evaluated as
/// xs^T S* xs.
void rhs_rom(const ReducedModel& rom, double t, const Eigen::Ref<const Vector>& x,
             const Eigen::Ref<const Vector>& u, Eigen::Ref<Vector> dx);

// ---------------------------------------------------------------------------
// Explicit Runge-Kutta integration.

using OdeRhs = std::function<void(double t, const Vector& x, Vector& dx)>;
using OutputMap = std::function<Vector(const Vector& x)>;

struct AdaptiveOptions {
  double rtol = 1e-6;
  double atol = 1e-8;
  /// <= 0 selects (t1 - t0) / 10.
  double max_step = 0.0;
  /// <= 0 selects the step automatically.
  double initial_step = 0.0;
  long max_steps = 10'000'000;
  /// Output times inside [t0, t1], strictly increasing. Empty: every
  /// accepted step, starting with t0.
  std::vector<double> t_eval;
  bool store_states = false;
};

struct AdaptiveStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Dormand-Prince 4(5) with PI step-size control and 4th-order dense
/// output. Throws NumericalError naming the time of failure when the step
/// size underflows. `output` maps states to outputs; when empty the state
/// itself is the output.
Trajectory integrate_adaptive(const OdeRhs& f, const Vector& x0, double t0, double t1,
                              const AdaptiveOptions& opts, const OutputMap& output = {},
                              AdaptiveStats* stats = nullptr);

/// Same tableau with a constant step, propagating the 5th-order solution
/// (embedded = false) or the 4th-order embedded one. Returns the final state.
Vector integrate_rk_fixed(const OdeRhs& f, const Vector& x0, double t0, double t1, long num_steps,
                          bool embedded = false);

// ---------------------------------------------------------------------------
// Implicit trapezoidal rule with a constant step. The stage matrix
// I - h/2 A is factorized once per run.

Trajectory integrate_trapezoidal(const LtiQuadraticSystem& sys, const InputSignal& u, double t_end,
                                 long num_steps);
/// Output columns are the stacked (z+; z-).
Trajectory integrate_trapezoidal(const MimoLinearSystem& sys, const InputSignal& u, double t_end,
                                 long num_steps);
Trajectory integrate_trapezoidal(const QuadraticBilinearSystem& sys, const InputSignal& u,
                                 double t_end, long num_steps);
Trajectory integrate_trapezoidal(const ReducedModel& rom, const InputSignal& u, double t_end,
                                 long num_steps);

// ---------------------------------------------------------------------------
// Adaptive simulation of each model type; the output is y.

Trajectory simulate(const LtiQuadraticSystem& sys, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts);
/// Output columns are the stacked (z+; z-); see recombined_output.
Trajectory simulate(const MimoLinearSystem& sys, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts);
Trajectory simulate(const QuadraticBilinearSystem& sys, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts);
Trajectory simulate(const ReducedModel& rom, const InputSignal& u, double t_end,
                    const AdaptiveOptions& opts);

/// y = |z+|^2 - |z-|^2 per time of a MIMO trajectory.
Vector recombined_output(const MimoLinearSystem& sys, const Trajectory& traj);

// ---------------------------------------------------------------------------

struct ErrorMetrics {
  double e_abs = 0.0;
  double e_rel = 0.0;
  /// Grid points with |y_ref| below the floor.
  Index excluded_points = 0;
};

inline constexpr double kDefaultRelativeFloor = 1e-300;

/// E_abs = max |y - y_ref|; E_rel = (1/T) * trapezoidal integral of
/// |y - y_ref| / |y_ref|. Intervals touching a point with |y_ref| < floor
/// contribute nothing. Throws DimensionError for mismatched grids.
ErrorMetrics error_metrics(const std::vector<double>& times, const Eigen::Ref<const Vector>& y_ref,
                           const Eigen::Ref<const Vector>& y, double floor = kDefaultRelativeFloor);
ErrorMetrics error_metrics(const Trajectory& ref, const Trajectory& approx,
                           double floor = kDefaultRelativeFloor);

/// `t,y` for one output column, `t,y1,...,ym` otherwise.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace qbmor
