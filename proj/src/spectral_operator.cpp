#include "roughflow/spectral_operator.hpp"

#include <cmath>
#include <string>

#include "roughflow/kernels.hpp"

namespace roughflow {

namespace {

void check_sorted_finite(const std::vector<double>& eigs) {
  if (eigs.empty()) throw InvalidInput("SpectralOperator: empty spectrum");
  for (std::size_t k = 0; k < eigs.size(); ++k) {
    if (!std::isfinite(eigs[k]))
      throw InvalidInput("SpectralOperator: non-finite eigenvalue");
    if (k > 0 && eigs[k] > eigs[k - 1])
      throw InvalidInput("SpectralOperator: eigenvalues must be nonincreasing");
  }
}

}  // namespace

SpectralOperator::SpectralOperator(std::vector<double> eigenvalues)
    : eigenvalues_(std::move(eigenvalues)) {
  check_sorted_finite(eigenvalues_);
  int nu = 0;
  for (double l : eigenvalues_)
    if (l > 0.0) ++nu;
  n_unstable_ = nu;
}

SpectralOperator::SpectralOperator(std::vector<double> eigenvalues,
                                   double alpha_gap, double beta_gap)
    : eigenvalues_(std::move(eigenvalues)),
      has_gap_(true),
      alpha_gap_(alpha_gap),
      beta_gap_(beta_gap) {
  check_sorted_finite(eigenvalues_);
  if (!(alpha_gap > 0.0) || !(beta_gap > 0.0))
    throw InvalidConfig("SpectralOperator: gap bounds must be positive");
  int nu = 0;
  for (double l : eigenvalues_) {
    if (l >= alpha_gap_) {
      ++nu;
    } else if (!(l <= -beta_gap_)) {
      throw AssumptionError("SpectralOperator: eigenvalue " + std::to_string(l) +
                            " falls inside the gap (-" + std::to_string(beta_gap_) +
                            ", " + std::to_string(alpha_gap_) + ")");
    }
  }
  n_unstable_ = nu;
}

SpectralOperator SpectralOperator::preset_parabolic(int m, double mu,
                                                    int n_modes, int d_spatial) {
  if (d_spatial != 1)
    throw InvalidConfig("preset_parabolic: only d_spatial = 1 is modeled");
  if (m < 1) throw InvalidConfig("preset_parabolic: order m must be >= 1");
  if (n_modes < 2) throw InvalidConfig("preset_parabolic: need n_modes >= 2");
  std::vector<double> eigs(n_modes);
  for (int k = 1; k <= n_modes; ++k)
    eigs[k - 1] = mu - std::pow(static_cast<double>(k), 2.0 * m);
  return SpectralOperator(std::move(eigs));
}

SpectralOperator SpectralOperator::preset_parabolic(int m, double mu,
                                                    int n_modes, double alpha_gap,
                                                    double beta_gap,
                                                    int d_spatial) {
  SpectralOperator base = preset_parabolic(m, mu, n_modes, d_spatial);
  return SpectralOperator(base.eigenvalues_, alpha_gap, beta_gap);
}

double SpectralOperator::alpha_gap() const {
  if (!has_gap_) throw ConfigError("SpectralOperator: no spectral gap attached");
  return alpha_gap_;
}

double SpectralOperator::beta_gap() const {
  if (!has_gap_) throw ConfigError("SpectralOperator: no spectral gap attached");
  return beta_gap_;
}

void SpectralOperator::require_manifold_gap() const {
  if (!has_gap_)
    throw ConfigError("manifold machinery needs an operator with a spectral gap");
  if (!(beta_gap_ < alpha_gap_))
    throw ConfigError("manifold machinery needs beta < alpha (delta = (alpha-beta)/2 > 0)");
  if (n_unstable_ == 0 || n_unstable_ == n_modes())
    throw ConfigError("manifold machinery needs both unstable and stable modes");
}

std::vector<double> interp_weights(const SpectralOperator& op, double alpha) {
  std::vector<double> w(op.n_modes());
  for (int k = 0; k < op.n_modes(); ++k)
    w[k] = std::pow(1.0 + std::abs(op.eigenvalue(k)), 2.0 * alpha);
  return w;
}

double interp_norm(const SpectralOperator& op, const Coeffs& x, double alpha) {
  if (static_cast<int>(x.size()) != op.n_modes())
    throw InvalidInput("interp_norm: coefficient count does not match spectrum");
  const std::vector<double> w = interp_weights(op, alpha);
  return std::sqrt(kernels::weighted_normsq(x.data(), w.data(), x.size()));
}

Coeffs semigroup_apply(const SpectralOperator& op, double t, const Coeffs& x) {
  if (t < 0.0)
    throw InvalidInput("semigroup_apply: t must be >= 0 (backward time is the "
                       "unstable group's job)");
  if (static_cast<int>(x.size()) != op.n_modes())
    throw InvalidInput("semigroup_apply: coefficient count does not match spectrum");
  Coeffs out(x.size());
  for (int k = 0; k < op.n_modes(); ++k)
    out[k] = std::exp(op.eigenvalue(k) * t) * x[k];
  return out;
}

Coeffs group_apply_unstable(const SpectralOperator& op, double t,
                            const Coeffs& x) {
  if (t > 0.0) throw InvalidInput("group_apply_unstable: t must be <= 0");
  if (static_cast<int>(x.size()) != op.n_modes())
    throw InvalidInput("group_apply_unstable: coefficient count mismatch");
  const int nu = op.n_unstable();
  double stable_mass = 0.0;
  for (int k = nu; k < op.n_modes(); ++k) stable_mass += x[k] * x[k];
  if (std::sqrt(stable_mass) > 1e-14)
    throw ProjectionError("group_apply_unstable: input carries stable-mode mass");
  Coeffs out(x.size(), 0.0);
  for (int k = 0; k < nu; ++k) out[k] = std::exp(op.eigenvalue(k) * t) * x[k];
  return out;
}

Coeffs project(const SpectralOperator& op, const Coeffs& x, Block which) {
  if (static_cast<int>(x.size()) != op.n_modes())
    throw InvalidInput("project: coefficient count does not match spectrum");
  const int nu = op.n_unstable();
  Coeffs out(x.size(), 0.0);
  if (which == Block::unstable) {
    for (int k = 0; k < nu; ++k) out[k] = x[k];
  } else {
    for (int k = nu; k < op.n_modes(); ++k) out[k] = x[k];
  }
  return out;
}

double smoothing_check(const SpectralOperator& op,
                       const std::vector<double>& t_samples, double alpha,
                       double beta_space, const Coeffs& x) {
  if (alpha < beta_space)
    throw InvalidInput("smoothing_check: need alpha >= beta_space");
  const double denom = interp_norm(op, x, beta_space);
  if (denom == 0.0) return 0.0;
  double worst = 0.0;
  for (double t : t_samples) {
    if (!(t > 0.0)) throw InvalidInput("smoothing_check: t samples must be positive");
    const Coeffs st = semigroup_apply(op, t, x);
    const double c = interp_norm(op, st, alpha) * std::pow(t, alpha - beta_space) / denom;
    if (c > worst) worst = c;
  }
  return worst;
}

double smoothing_difference_check(const SpectralOperator& op,
                                  const std::vector<double>& t_samples,
                                  double gamma_t, double beta_space,
                                  const Coeffs& x) {
  if (!(gamma_t >= 0.0 && gamma_t <= 1.0))
    throw InvalidInput("smoothing_difference_check: exponent must lie in [0, 1]");
  const double denom = interp_norm(op, x, beta_space);
  if (denom == 0.0) return 0.0;
  double worst = 0.0;
  Coeffs diff(x.size());
  for (double t : t_samples) {
    if (!(t > 0.0))
      throw InvalidInput("smoothing_difference_check: t samples must be positive");
    const Coeffs st = semigroup_apply(op, t, x);
    for (std::size_t k = 0; k < x.size(); ++k) diff[k] = st[k] - x[k];
    const double c =
        interp_norm(op, diff, beta_space - gamma_t) * std::pow(t, -gamma_t) / denom;
    if (c > worst) worst = c;
  }
  return worst;
}

}  // namespace roughflow
