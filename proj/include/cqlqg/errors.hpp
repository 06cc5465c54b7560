#pragma once

#include <stdexcept>
#include <string>

namespace cqlqg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible or invalid matrix dimensions.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A structural precondition failed (symmetry, antisymmetry, CCR, feedthrough
/// pattern, rank).
class StructureError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be Hurwitz (after the discount shift) is not.
class StabilityError : public Error {
 public:
  StabilityError(const std::string& what, double abscissa, double max_T)
      : Error(what), abscissa_(abscissa), max_admissible_T_(max_T) {}

  double abscissa() const { return abscissa_; }
  double max_admissible_T() const { return max_admissible_T_; }

 private:
  double abscissa_;
  double max_admissible_T_;
};

/// A documented precondition on scalar arguments is violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Breakdown of a numerical kernel (singular system, non-finite values).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The zero-horizon initial controller could not be formed.
class InitError : public Error {
 public:
  using Error::Error;
};

/// The homotopy step could not be taken (singular restricted Hessian,
/// corrector failure).
class ContinuationError : public Error {
 public:
  using Error::Error;
};

/// A file could not be read, parsed or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cqlqg
