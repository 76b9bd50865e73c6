#pragma once

#include <cstddef>
#include <vector>

#include "roughflow/controlled_path.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/spectral_operator.hpp"
#include "roughflow/time_grid.hpp"

namespace roughflow {

struct IntegralResult {
  Coeffs value;                  // mode coefficients of the integral
  int partition_level = 0;       // dyadic refinements performed
  double cauchy_residual = 0.0;  // Euclidean delta between the last two levels
  double local_error_model = 0.0;  // filled by the order probe; NaN otherwise
};

// Semigroup-convolved integral of a controlled integrand over [s,t] (both on
// the grid): compensated sums S_{t-u}(z_u dw + z'_u w2) over nested dyadic
// partitions, refined until two consecutive levels agree to tol/8 -- the
// safety factor keeps the reported value within tol of the refinement limit.
// Once every interval is a single grid step the sum is the full discrete
// integral and is returned as-is (further refinement cannot change it).
// Integrand width must equal the driver dimension.
IntegralResult rough_convolution(const SpectralOperator& op,
                                 const ControlledPath& integrand,
                                 const RoughPath& p, double s, double t,
                                 double tol, int max_level = 14);

// Least-squares slope of log residual against log span for the one-step
// compensated approximation, over a dyadic ladder of interval lengths.
// Residuals are measured at space index integrand.alpha + beta_target.
// Returns +infinity when every residual on the ladder vanishes.
double local_error_probe(const SpectralOperator& op, const ControlledPath& integrand,
                         const RoughPath& p, double beta_target);

// Exponential-trapezoid quadrature of int_s^t S_{t-u} f(u) du with mode-exact
// semigroup factors; f_values holds n_points rows of n_modes coefficients.
Coeffs duhamel_drift(const SpectralOperator& op, const TimeGrid& grid,
                     const std::vector<double>& f_values, double s, double t);

}  // namespace roughflow
