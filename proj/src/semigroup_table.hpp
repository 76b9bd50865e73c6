#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "roughflow/spectral_operator.hpp"

namespace roughflow::detail {

// E[l][k] = exp(lambda_k * l * h) for lags l = 0..n_lags-1, row stride n_modes.
inline std::vector<double> lag_exp_table(const SpectralOperator& op,
                                         std::size_t n_lags, double h) {
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  std::vector<double> e(n_lags * N);
  for (std::size_t l = 0; l < n_lags; ++l)
    for (std::size_t k = 0; k < N; ++k)
      e[l * N + k] = std::exp(op.eigenvalue(static_cast<int>(k)) * (double(l) * h));
  return e;
}

// (l*h)^(-expo) for lags l = 1..n_lags-1; entry 0 unused.
inline std::vector<double> lag_inv_power(std::size_t n_lags, double h, double expo) {
  std::vector<double> s(n_lags, 0.0);
  for (std::size_t l = 1; l < n_lags; ++l) s[l] = std::pow(double(l) * h, -expo);
  return s;
}

}  // namespace roughflow::detail
