#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "roughflow/nonlinearity.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/spectral_operator.hpp"
#include "roughflow/time_grid.hpp"

namespace roughflow {

// A mildly controlled pair (y, y') sampled on a grid. y has `width` channels
// of n_modes coefficients each; y' additionally resolves the d driver
// components. `alpha` is the base space index: the pair increment
// y_t - S_{t-s} y_s - S_{t-s} y'_s dw_{t,s} is measured at alpha, while the
// trajectory itself lives two gamma-degrees higher. The solution space
// corresponds to alpha = -2*gamma.
struct ControlledPath {
  TimeGrid grid;
  std::size_t n_modes = 0;
  std::size_t width = 1;
  std::size_t d = 1;
  double gamma = 0.5;
  double eta = 0.0;
  double alpha = -1.0;
  std::vector<double> y;   // [n][width][n_modes]
  std::vector<double> yp;  // [n][width][d][n_modes]

  double* y_at(std::size_t i, std::size_t b) {
    return y.data() + (i * width + b) * n_modes;
  }
  const double* y_at(std::size_t i, std::size_t b) const {
    return y.data() + (i * width + b) * n_modes;
  }
  double* yp_at(std::size_t i, std::size_t b, std::size_t a) {
    return yp.data() + ((i * width + b) * d + a) * n_modes;
  }
  const double* yp_at(std::size_t i, std::size_t b, std::size_t a) const {
    return yp.data() + ((i * width + b) * d + a) * n_modes;
  }
};

ControlledPath make_controlled_path(const TimeGrid& grid, std::size_t n_modes,
                                    std::size_t width, std::size_t d, double gamma,
                                    double eta, double alpha);

// Discrete suprema of the norm family attached to a controlled pair. All
// two-parameter quantities run over every grid pair s < t.
struct ControlledNorms {
  double holder_y_hat = 0.0;     // gamma-Holder of y against the semigroup, base index
  double sup_yp = 0.0;           // sup_t of |y'_t| two gamma-degrees up
  double remainder_2gamma = 0.0; // 2gamma-Holder of the remainder, base index
  double eta_norm = 0.0;         // eta-Holder of y two gamma-degrees up (sup norm if eta=0)
  double seminorm_w = 0.0;       // gamma-Holder of y' at base index + remainder
  double d_norm = 0.0;           // |y_0| + |y'_0| + eta_norm + sup_yp + seminorm_w
};

struct RemainderField {
  TimeGrid grid;
  std::size_t width = 1;
  std::size_t n_modes = 0;
  std::vector<double> r;  // [pair(i<=j)][width][n_modes]

  std::size_t pair_index(std::size_t i, std::size_t j) const {
    const std::size_t n = grid.n_points();
    return i * n - i * (i - 1) / 2 + (j - i);
  }
  const double* at(std::size_t i, std::size_t j, std::size_t b) const {
    return r.data() + (pair_index(i, j) * width + b) * n_modes;
  }
};

RemainderField remainder(const ControlledPath& cp, const RoughPath& p,
                         const SpectralOperator& op);

ControlledNorms norms(const ControlledPath& cp, const RoughPath& p,
                      const SpectralOperator& op);

// (z, z') = (g(y), Dg(y) y'). Input must be single-channel; the output width
// is g's. If g carries a truncation, the trajectory is scaled by the bump
// factor before g is applied, on both levels.
ControlledPath compose(const Nonlinearity& g, const ControlledPath& cp,
                       const RoughPath& p, const SpectralOperator& op);

// Scales the whole pair by phi(|y,y'|_D / R): identity inside the R/2 ball,
// zero outside the R ball.
ControlledPath cutoff_chi(const ControlledPath& cp, const CutoffConfig& cfg,
                          const RoughPath& p, const SpectralOperator& op);

double cutoff_factor(const ControlledPath& cp, const CutoffConfig& cfg,
                     const RoughPath& p, const SpectralOperator& op);

// Solves c_f R + c_g(R) (1+|w|+|w2|)(1+|w|)^2 = K for R by bisection and caps
// the result at 1. c_g must be nondecreasing with c_g(0+) small enough that a
// root exists; otherwise InvalidConfig.
CutoffConfig solve_cutoff_radius(const RoughPath& p, double K, double c_f,
                                 const std::function<double(double)>& c_g);

}  // namespace roughflow
