#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace roughflow {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two objects live on different (or non-nested) time grids.
struct GridMismatch : Error {
  using Error::Error;
};

// A value fails a precondition (NaN samples, negative time, wrong dimension...).
struct InvalidInput : Error {
  using Error::Error;
};

// A construction parameter is outside its admissible range.
struct InvalidConfig : Error {
  using Error::Error;
};

// A requested time/window lies outside the stored extent.
struct OutOfRange : Error {
  using Error::Error;
};

// An iteration failed to reach its tolerance; carries the residual history.
struct ConvergenceError : Error {
  std::vector<double> residual_trace;
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : Error(what), residual_trace(std::move(trace)) {}
};

// Local step size was halved below the grid spacing.  When thrown from a
// multi-segment solve, t_reached / segments_done describe the partial
// trajectory built before the failing segment.
struct StepUnderflow : Error {
  double t_reached = 0.0;
  int segments_done = 0;
  using Error::Error;
  StepUnderflow(const std::string& what, double t, int segs)
      : Error(what), t_reached(t), segments_done(segs) {}
};

// A vector was fed to a spectral-block operation it does not belong to.
struct ProjectionError : Error {
  using Error::Error;
};

// A run configuration file is malformed or inconsistent.
struct ConfigError : Error {
  using Error::Error;
};

// A structural hypothesis (spectral gap, stationarity of the nonlinearity,
// smallness condition) required by the requested operation does not hold.
struct AssumptionError : Error {
  using Error::Error;
};

}  // namespace roughflow
