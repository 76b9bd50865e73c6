#pragma once

#include <vector>

#include "roughflow/errors.hpp"

namespace roughflow {

// Mode coefficient vector of the solution space; norms at a given
// interpolation index are taken with weights (1+|lambda_k|)^(2 alpha). The
// index is a measurement parameter, not state: the same vector is routinely
// measured at several indices.
using Coeffs = std::vector<double>;

enum class Block { unstable, stable };

// Diagonal realization of the linear part A: eigenvalues sorted
// nonincreasing, semigroup and norms all mode-wise and exact. A spectral gap
// (alpha, beta) with every eigenvalue >= alpha or <= -beta may be attached;
// it is required by the invariant-manifold machinery and optional elsewhere.
class SpectralOperator {
 public:
  explicit SpectralOperator(std::vector<double> eigenvalues);
  SpectralOperator(std::vector<double> eigenvalues, double alpha_gap,
                   double beta_gap);

  // 2m-th order dissipative ladder with spectral shift mu:
  // lambda_k = mu - k^(2m), k = 1..n_modes. d_spatial is fixed at 1.
  static SpectralOperator preset_parabolic(int m, double mu, int n_modes,
                                           int d_spatial = 1);
  static SpectralOperator preset_parabolic(int m, double mu, int n_modes,
                                           double alpha_gap, double beta_gap,
                                           int d_spatial = 1);

  int n_modes() const { return static_cast<int>(eigenvalues_.size()); }
  double eigenvalue(int k) const { return eigenvalues_[k]; }
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  bool has_gap() const { return has_gap_; }
  double alpha_gap() const;
  double beta_gap() const;
  // Count of eigenvalues >= alpha_gap (or > 0 when no gap is attached).
  int n_unstable() const { return n_unstable_; }

  // Enforced when the manifold machinery is entered: alpha > beta > 0.
  void require_manifold_gap() const;

 private:
  std::vector<double> eigenvalues_;
  bool has_gap_ = false;
  double alpha_gap_ = 0.0;
  double beta_gap_ = 0.0;
  int n_unstable_ = 0;
};

// Weights (1+|lambda_k|)^(2 alpha) for norms at interpolation index alpha.
std::vector<double> interp_weights(const SpectralOperator& op, double alpha);

// (sum_k (1+|lambda_k|)^(2 alpha) x_k^2)^(1/2)
double interp_norm(const SpectralOperator& op, const Coeffs& x, double alpha);

// Mode-wise e^(lambda_k t), t >= 0 (full semigroup; unstable modes grow).
Coeffs semigroup_apply(const SpectralOperator& op, double t, const Coeffs& x);

// Backward group on the unstable block, t <= 0. x must carry no stable-mode
// mass beyond 1e-14.
Coeffs group_apply_unstable(const SpectralOperator& op, double t,
                            const Coeffs& x);

Coeffs project(const SpectralOperator& op, const Coeffs& x, Block which);

// max over t-samples of |S_t x|_{H_alpha} t^(alpha-beta_space) / |x|_{H_beta_space};
// the discrete constant of the first smoothing estimate.
double smoothing_check(const SpectralOperator& op,
                       const std::vector<double>& t_samples, double alpha,
                       double beta_space, const Coeffs& x);

// Same sweep for the difference estimate:
// max over t-samples of |S_t x - x|_{H_(beta_space - gamma_t)} t^(-gamma_t) / |x|_{H_beta_space}.
double smoothing_difference_check(const SpectralOperator& op,
                                  const std::vector<double>& t_samples,
                                  double gamma_t, double beta_space,
                                  const Coeffs& x);

}  // namespace roughflow
