#pragma once

#include <stdexcept>
#include <string>

namespace qbmor {

/// Operand shapes do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition on values (not shapes) is violated.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The system matrix has an eigenvalue with nonnegative real part.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, double abscissa)
      : std::runtime_error(what), spectral_abscissa_(abscissa) {}
  double spectral_abscissa() const { return spectral_abscissa_; }

 private:
  double spectral_abscissa_;
};

/// A numerical kernel failed: eigen-solver non-convergence, singular
/// linear operator, step-size underflow, internal consistency check.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or schema.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qbmor
