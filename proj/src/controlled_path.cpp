#include "roughflow/controlled_path.hpp"

#include <cmath>
#include <cstring>

#include "roughflow/errors.hpp"
#include "roughflow/kernels.hpp"
#include "semigroup_table.hpp"

namespace roughflow {

namespace {

void check_compat(const ControlledPath& cp, const RoughPath& p,
                  const SpectralOperator& op) {
  if (!(cp.grid == p.grid)) throw GridMismatch("controlled path and driver grids differ");
  if (cp.d != static_cast<std::size_t>(p.d))
    throw InvalidInput("controlled path and driver dimensions differ");
  if (cp.n_modes != static_cast<std::size_t>(op.n_modes()))
    throw InvalidInput("controlled path and operator mode counts differ");
  if (cp.gamma != p.gamma)
    throw InvalidInput("controlled path and driver regularity exponents differ");
}

}  // namespace

ControlledPath make_controlled_path(const TimeGrid& grid, std::size_t n_modes,
                                    std::size_t width, std::size_t d, double gamma,
                                    double eta, double alpha) {
  if (!(gamma > 1.0 / 3.0) || !(gamma <= 0.5))
    throw InvalidConfig("controlled path needs gamma in (1/3, 1/2]");
  if (!(eta >= 0.0) || !(eta < gamma))
    throw InvalidConfig("controlled path needs eta in [0, gamma)");
  if (n_modes == 0 || width == 0 || d == 0)
    throw InvalidConfig("controlled path needs positive sizes");
  ControlledPath cp;
  cp.grid = grid;
  cp.n_modes = n_modes;
  cp.width = width;
  cp.d = d;
  cp.gamma = gamma;
  cp.eta = eta;
  cp.alpha = alpha;
  cp.y.assign(grid.n_points() * width * n_modes, 0.0);
  cp.yp.assign(grid.n_points() * width * d * n_modes, 0.0);
  return cp;
}

RemainderField remainder(const ControlledPath& cp, const RoughPath& p,
                         const SpectralOperator& op) {
  check_compat(cp, p, op);
  const std::size_t n = cp.grid.n_points(), N = cp.n_modes, m = cp.width, d = cp.d;
  const std::size_t npairs = n * (n + 1) / 2;
  if (npairs * m * N > 200u * 1000u * 1000u)
    throw InvalidInput("remainder field would be too large; use norms() for suprema");

  RemainderField rf;
  rf.grid = cp.grid;
  rf.width = m;
  rf.n_modes = N;
  rf.r.assign(npairs * m * N, 0.0);

  const std::vector<double> E = detail::lag_exp_table(op, n, cp.grid.dt());
  std::vector<double> tmp(N);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* erow = E.data() + (j - i) * N;
      for (std::size_t b = 0; b < m; ++b) {
        // R_{t,s} = y_t - S_{t-s} (y_s + y'_s dw_{t,s})
        std::memcpy(tmp.data(), cp.y_at(i, b), N * sizeof(double));
        for (std::size_t a = 0; a < d; ++a) {
          const double dw = p.w_at(j)[a] - p.w_at(i)[a];
          kernels::axpy(dw, cp.yp_at(i, b, a), tmp.data(), N);
        }
        double* out = rf.r.data() + (rf.pair_index(i, j) * m + b) * N;
        const double* yj = cp.y_at(j, b);
        for (std::size_t k = 0; k < N; ++k) out[k] = yj[k] - erow[k] * tmp[k];
      }
    }
  return rf;
}

ControlledNorms norms(const ControlledPath& cp, const RoughPath& p,
                      const SpectralOperator& op) {
  check_compat(cp, p, op);
  const std::size_t n = cp.grid.n_points(), N = cp.n_modes, m = cp.width, d = cp.d;
  const double h = cp.grid.dt();

  const std::vector<double> E = detail::lag_exp_table(op, n, h);
  const std::vector<double> w_base = interp_weights(op, cp.alpha);
  const std::vector<double> w_sol = interp_weights(op, cp.alpha + 2.0 * cp.gamma);
  const std::vector<double> s_g = detail::lag_inv_power(n, h, cp.gamma);
  const std::vector<double> s_2g = detail::lag_inv_power(n, h, 2.0 * cp.gamma);
  const std::vector<double> s_eta =
      cp.eta > 0.0 ? detail::lag_inv_power(n, h, cp.eta) : std::vector<double>();

  ControlledNorms out;
  double holder2 = 0.0, yp_holder2 = 0.0, rem2 = 0.0, eta2 = 0.0, sup2 = 0.0;
  std::vector<double> tmp(N);

  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t a = 0; a < d; ++a)
        s += kernels::weighted_normsq(cp.yp_at(i, b, a), w_sol.data(), N);
    sup2 = std::max(sup2, s);
    if (cp.eta == 0.0) {
      double sy = 0.0;
      for (std::size_t b = 0; b < m; ++b)
        sy += kernels::weighted_normsq(cp.y_at(i, b), w_sol.data(), N);
      eta2 = std::max(eta2, sy);
    }
  }

  for (std::size_t l = 1; l < n; ++l) {
    const double* erow = E.data() + l * N;
    const double sg2 = s_g[l] * s_g[l];
    const double s2g2 = s_2g[l] * s_2g[l];
    for (std::size_t i = 0; i + l < n; ++i) {
      const std::size_t j = i + l;
      double hy = 0.0, hyp = 0.0, hr = 0.0;
      for (std::size_t b = 0; b < m; ++b) {
        hy += kernels::hat_diff_weighted_normsq(cp.y_at(j, b), cp.y_at(i, b), erow,
                                                w_base.data(), N);
        for (std::size_t a = 0; a < d; ++a)
          hyp += kernels::hat_diff_weighted_normsq(cp.yp_at(j, b, a), cp.yp_at(i, b, a),
                                                   erow, w_base.data(), N);
        std::memcpy(tmp.data(), cp.y_at(i, b), N * sizeof(double));
        for (std::size_t a = 0; a < d; ++a) {
          const double dw = p.w_at(j)[a] - p.w_at(i)[a];
          kernels::axpy(dw, cp.yp_at(i, b, a), tmp.data(), N);
        }
        hr += kernels::hat_diff_weighted_normsq(cp.y_at(j, b), tmp.data(), erow,
                                                w_base.data(), N);
      }
      holder2 = std::max(holder2, hy * sg2);
      yp_holder2 = std::max(yp_holder2, hyp * sg2);
      rem2 = std::max(rem2, hr * s2g2);
      if (cp.eta > 0.0) {
        double he = 0.0;
        for (std::size_t b = 0; b < m; ++b)
          he += kernels::hat_diff_weighted_normsq(cp.y_at(j, b), cp.y_at(i, b), erow,
                                                  w_sol.data(), N);
        eta2 = std::max(eta2, he * s_eta[l] * s_eta[l]);
      }
    }
  }

  out.holder_y_hat = std::sqrt(holder2);
  out.sup_yp = std::sqrt(sup2);
  out.remainder_2gamma = std::sqrt(rem2);
  out.eta_norm = std::sqrt(eta2);
  out.seminorm_w = std::sqrt(yp_holder2) + out.remainder_2gamma;

  double y0 = 0.0, yp0 = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    y0 += kernels::weighted_normsq(cp.y_at(0, b), w_sol.data(), N);
    for (std::size_t a = 0; a < d; ++a)
      yp0 += kernels::weighted_normsq(cp.yp_at(0, b, a), w_base.data(), N);
  }
  out.d_norm = std::sqrt(y0) + std::sqrt(yp0) + out.eta_norm + out.sup_yp + out.seminorm_w;
  return out;
}

ControlledPath compose(const Nonlinearity& g, const ControlledPath& cp,
                       const RoughPath& p, const SpectralOperator& op) {
  check_compat(cp, p, op);
  if (cp.width != 1)
    throw InvalidInput("compose expects a single-channel controlled path");
  if (g.n_modes() != cp.n_modes)
    throw InvalidInput("nonlinearity and controlled path mode counts differ");

  double factor = 1.0;
  if (g.truncation()) factor = cutoff_factor(cp, *g.truncation(), p, op);

  const std::size_t n = cp.grid.n_points(), N = cp.n_modes, d = cp.d;
  const std::size_t mo = g.out_width();
  ControlledPath out =
      make_controlled_path(cp.grid, N, mo, d, cp.gamma, 0.0, cp.alpha);

  std::vector<double> yin(N), vin(N), buf(mo * N);
  for (std::size_t i = 0; i < n; ++i) {
    const double* yi = cp.y_at(i, 0);
    for (std::size_t k = 0; k < N; ++k) yin[k] = factor * yi[k];
    g.eval(yin.data(), buf.data());
    for (std::size_t b = 0; b < mo; ++b)
      std::memcpy(out.y_at(i, b), buf.data() + b * N, N * sizeof(double));
    for (std::size_t a = 0; a < d; ++a) {
      const double* vi = cp.yp_at(i, 0, a);
      for (std::size_t k = 0; k < N; ++k) vin[k] = factor * vi[k];
      g.deriv_apply(yin.data(), vin.data(), buf.data());
      for (std::size_t b = 0; b < mo; ++b)
        std::memcpy(out.yp_at(i, b, a), buf.data() + b * N, N * sizeof(double));
    }
  }
  return out;
}

double cutoff_factor(const ControlledPath& cp, const CutoffConfig& cfg,
                     const RoughPath& p, const SpectralOperator& op) {
  cfg.validate();
  return CutoffConfig::phi(norms(cp, p, op).d_norm / cfg.R);
}

ControlledPath cutoff_chi(const ControlledPath& cp, const CutoffConfig& cfg,
                          const RoughPath& p, const SpectralOperator& op) {
  const double factor = cutoff_factor(cp, cfg, p, op);
  ControlledPath out = cp;
  if (factor == 1.0) return out;
  kernels::scale(factor, out.y.data(), out.y.size());
  kernels::scale(factor, out.yp.data(), out.yp.size());
  return out;
}

CutoffConfig solve_cutoff_radius(const RoughPath& p, double K, double c_f,
                                 const std::function<double(double)>& c_g) {
  if (!(K > 0.0)) throw InvalidConfig("contraction budget must be positive");
  if (!(c_f >= 0.0)) throw InvalidConfig("drift constant must be nonnegative");
  const PathHolderNorms hn = holder_norms(p);
  const double B =
      (1.0 + hn.w_gamma + hn.w2_2gamma) * (1.0 + hn.w_gamma) * (1.0 + hn.w_gamma);

  double prev = c_g(0.0);
  if (!(prev >= 0.0)) throw InvalidConfig("diffusion constant must be nonnegative");
  for (int i = 1; i <= 16; ++i) {
    const double v = c_g(i / 16.0);
    if (v < prev - 1e-12 * std::max(1.0, std::abs(prev)))
      throw InvalidConfig("diffusion constant must be nondecreasing in R");
    prev = v;
  }

  const auto lhs = [&](double R) { return c_f * R + c_g(R) * B; };
  CutoffConfig cfg;
  cfg.K = K;
  if (lhs(1.0) <= K) {
    cfg.R = 1.0;  // budget generous enough that the cap binds
    return cfg;
  }
  if (lhs(0.0) >= K)
    throw InvalidConfig("no admissible radius: budget is below the small-R limit");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lhs(mid) <= K ? lo : hi) = mid;
  }
  cfg.R = 0.5 * (lo + hi);
  cfg.validate();
  return cfg;
}

}  // namespace roughflow
