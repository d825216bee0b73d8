#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A SystemSpec violates the structural assumptions (dimensions, ranks, bounds).
struct InvalidSpecError : Error {
  using Error::Error;
};

/// Parameters outside their admissible range (alphas, spreads, orders, ...).
struct InvalidParametersError : Error {
  using Error::Error;
};

/// Evaluation requested at a point where the quantity diverges.
struct SingularEvaluationError : Error {
  using Error::Error;
};

/// The control basis is degenerate (coinciding exponents, vanishing Wronskian).
struct DegenerateBasisError : Error {
  using Error::Error;
};

/// Endpoint times too close: the control problem degenerates.
struct TimeDegenerateError : Error {
  using Error::Error;
};

/// An affine connection map is singular at the requested parameter.
struct SingularMapError : Error {
  using Error::Error;
};

/// Cylinder/region does not meet the grid as required.
struct GeometryError : Error {
  using Error::Error;
};

/// Explicit scheme stability bound violated; carries the largest admissible step.
struct CflError : Error {
  double suggested_dt;
  CflError(const std::string& msg, double dt) : Error(msg), suggested_dt(dt) {}
};

/// The scheme produced non-finite values.
struct DivergenceError : Error {
  using Error::Error;
};

/// Requested a mode outside the supported scope (e.g. beta < 1 solves).
struct UnsupportedModeError : Error {
  using Error::Error;
};

}  // namespace kolmo
