#pragma once

// Reformulations of a linear system with quadratic output:
//   * a linear system with many linear outputs (indefinite split of M), and
//   * a stabilized quadratic-bilinear system with a single linear output.

#include <utility>

#include "qbmor/core.hpp"

namespace qbmor {

inline constexpr double kDefaultSplitTolerance = 1e-12;
inline constexpr double kDefaultEpsilon = 1e-8;
inline constexpr double kBilinearVanishTolerance = 1e-14;

struct IndefiniteSplit {
  Matrix plus;   // n x m+, columns sqrt(lambda) v for lambda > 0
  Matrix minus;  // n x m-, columns sqrt(|lambda|) v for lambda < 0
};

/// M = plus plus^T - minus minus^T via a symmetric eigen-decomposition.
/// Eigenvalues with |lambda| <= tol_split * max|lambda| are dropped.
IndefiniteSplit split_indefinite(const Eigen::Ref<const Matrix>& m,
                                 double tol_split = kDefaultSplitTolerance);

MimoLinearSystem to_mimo_linear(const LtiQuadraticSystem& sys,
                                double tol_split = kDefaultSplitTolerance);

/// epsilon = 0 gives the unstabilized system, which is valid for simulation
/// but has no Gramians.
QuadraticBilinearSystem to_quadratic_bilinear(const LtiQuadraticSystem& sys,
                                              double epsilon = kDefaultEpsilon);

/// True iff b_j^T M vanishes for every input column, i.e. all N_j = 0.
/// Entries count as zero when |.| <= 1e-14 * |M|_2 * |b_j|_2.
bool bilinear_vanishes(const LtiQuadraticSystem& sys);

}  // namespace qbmor
