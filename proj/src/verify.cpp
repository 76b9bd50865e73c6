#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "io_util.hpp"
#include "roughflow/cli.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/manifold.hpp"
#include "roughflow/ree_solver.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/rough_integral.hpp"
#include "roughflow/rough_path.hpp"

namespace roughflow {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double ls_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

std::string two_decimals(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Deterministic scalar smooth driver w(t) = f(t) over [0, 1].
RoughPath smooth_scalar(std::size_t n, double gamma, double (*f)(double),
                        std::size_t refine = 32) {
  const TimeGrid target(0.0, 1.0, n);
  const TimeGrid fine = target.refined(refine);
  std::vector<double> s(fine.n_points());
  for (std::size_t i = 0; i < fine.n_points(); ++i) s[i] = f(fine.point(i));
  return build_smooth_lift(fine, s, 1, target, gamma);
}

// Random low-amplitude trigonometric driver whose dense samples are kept for
// classical quadrature oracles. Coefficients are uniform and bounded, so the
// discretization error of the compensated sum has a deterministic bound.
struct TrigFixture {
  RoughPath path;
  TimeGrid fine;
  std::vector<double> samples;  // [i][d]
  int d = 0;
};

TrigFixture trig_fixture(std::mt19937_64& rng, std::size_t n, int d,
                         double gamma, double coeff_bound,
                         std::size_t refine) {
  std::uniform_real_distribution<double> ud(-coeff_bound, coeff_bound);
  const TimeGrid target(0.0, 1.0, n);
  const TimeGrid fine = target.refined(refine);
  TrigFixture fx;
  fx.fine = fine;
  fx.d = d;
  fx.samples.assign(fine.n_points() * d, 0.0);
  for (int a = 0; a < d; ++a) {
    const double lin = ud(rng), c1 = ud(rng), d1 = ud(rng);
    for (std::size_t i = 0; i < fine.n_points(); ++i) {
      const double u = fine.point(i);
      fx.samples[i * d + a] = lin * u + c1 * std::sin(kTwoPi * u) +
                              d1 * (std::cos(kTwoPi * u) - 1.0);
    }
  }
  fx.path = build_smooth_lift(fine, fx.samples, d, target, gamma);
  return fx;
}

// z = F(w), z' = F'(w) for a scalar driver; the canonical probe integrand.
ControlledPath lifted_observable(const RoughPath& p, double (*F)(double),
                                 double (*F1)(double)) {
  ControlledPath z = make_controlled_path(p.grid, 1, 1, 1, p.gamma, 0.0, -1.0);
  for (std::size_t i = 0; i < p.grid.n_points(); ++i) {
    z.y_at(i, 0)[0] = F(p.w_at(i)[0]);
    z.yp_at(i, 0, 0)[0] = F1(p.w_at(i)[0]);
  }
  return z;
}

double sq_fn(double t) { return t * t; }

std::vector<double> unstable_vec(const SpectralOperator& op, double v) {
  std::vector<double> xi(static_cast<std::size_t>(op.n_modes()), 0.0);
  xi[0] = v;
  return xi;
}

// ---- individual check groups ----------------------------------------------

void check_chen(const VerifyParams& vp, std::uint64_t master, Report& rep) {
  const double tol = 1e-10;
  if (!vp.driver_file.empty()) {
    const RoughPath p = load_rough_path_json(vp.driver_file);
    rep.criteria.push_back(check_upper("chen/driver-file", chen_defect(p), tol,
                                       "loaded from " + vp.driver_file));
    return;
  }
  std::mt19937_64 rng = make_rng(master, "probes");
  const std::uint64_t base = sub_seed(master, "probes");

  double worst = 0.0;
  for (int c = 0; c < 2; ++c) {
    const TrigFixture fx = trig_fixture(rng, 65, 2, 0.45, 0.3, 16);
    worst = std::max(worst, chen_defect(fx.path));
  }
  rep.criteria.push_back(check_upper("chen/smooth", worst, tol));

  worst = 0.0;
  for (int s = 0; s < vp.bm_seeds; ++s) {
    const RoughPath p = build_bm_lift(splitmix64(base + std::uint64_t(s)),
                                      TimeGrid(0.0, 1.0, 65), 2, 0.45, 8);
    worst = std::max(worst, chen_defect(p));
  }
  rep.criteria.push_back(check_upper("chen/bm", worst, tol));

  const RoughPath pa =
      pure_area_path({0.0, 0.8, -0.8, 0.0}, TimeGrid(0.0, 1.0, 33), 0.5);
  rep.criteria.push_back(check_upper("chen/pure-area", chen_defect(pa), tol));
}

void check_quadrature(const VerifyParams& vp, std::uint64_t master,
                      Report& rep) {
  std::mt19937_64 rng = make_rng(master, "probes");
  const SpectralOperator id({0.0});

  // Controlled integrand z_a = phi_a(w), quadratic in the two components, so
  // both the Gubinelli derivative and the classical fine-grid value are
  // available in closed form.
  double worst = 0.0;
  std::uniform_real_distribution<double> qd(-0.5, 0.5);
  for (int c = 0; c < vp.quad_cases; ++c) {
    const TrigFixture fx = trig_fixture(rng, 1025, 2, 0.5, 0.05, 16);
    double q[2][5];
    for (auto& row : q)
      for (double& v : row) v = qd(rng);
    auto phi = [&](int a, double u, double v) {
      return q[a][0] * u + q[a][1] * v + q[a][2] * u * v + q[a][3] * u * u +
             q[a][4] * v * v;
    };
    auto dphi = [&](int a, int b, double u, double v) {
      return b == 0 ? q[a][0] + q[a][2] * v + 2.0 * q[a][3] * u
                    : q[a][1] + q[a][2] * u + 2.0 * q[a][4] * v;
    };

    const RoughPath& p = fx.path;
    ControlledPath z = make_controlled_path(p.grid, 1, 2, 2, p.gamma, 0.0, -1.0);
    for (std::size_t i = 0; i < p.n(); ++i) {
      const double u = p.w_at(i)[0], v = p.w_at(i)[1];
      for (int a = 0; a < 2; ++a) {
        z.y_at(i, a)[0] = phi(a, u, v);
        for (int b = 0; b < 2; ++b) z.yp_at(i, a, b)[0] = dphi(a, b, u, v);
      }
    }
    const double rough =
        rough_convolution(id, z, p, 0.0, 1.0, 1e-10).value[0];

    // trapezoid Riemann-Stieltjes on the dense internal samples
    double rs = 0.0;
    const std::size_t m = fx.fine.n_points();
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const double u0 = fx.samples[i * 2], v0 = fx.samples[i * 2 + 1];
      const double u1 = fx.samples[(i + 1) * 2], v1 = fx.samples[(i + 1) * 2 + 1];
      rs += 0.5 * (phi(0, u0, v0) + phi(0, u1, v1)) * (u1 - u0);
      rs += 0.5 * (phi(1, u0, v0) + phi(1, u1, v1)) * (v1 - v0);
    }
    worst = std::max(worst, std::abs(rough - rs));
  }
  rep.criteria.push_back(check_upper("quadrature/riemann-stieltjes", worst, 1e-6));

  const RoughPath pw = smooth_scalar(257, 0.5, sq_fn, 64);
  const ControlledPath zw = lifted_observable(
      pw, [](double w) { return w; }, [](double) { return 1.0; });
  const double rough = rough_convolution(id, zw, pw, 0.0, 1.0, 1e-10).value[0];
  const double w0 = pw.w_at(0)[0], w1 = pw.w_at(256)[0];
  rep.criteria.push_back(check_upper("quadrature/closed-form",
                                     std::abs(rough - 0.5 * (w1 * w1 - w0 * w0)),
                                     1e-8));
}

double sin2_fn(double t) { return std::sin(2.0 * t) + 0.3 * t; }

void check_order(std::uint64_t master, Report& rep) {
  const SpectralOperator id({0.0});
  const std::uint64_t base = sub_seed(master, "probes");
  for (const double gamma : {0.4, 0.5}) {
    const double bound = 3.0 * gamma - 0.15;
    {
      const RoughPath p = smooth_scalar(257, gamma, sin2_fn, 16);
      const ControlledPath z = lifted_observable(p, std::sin, std::cos);
      rep.criteria.push_back(check_lower("order/smooth-" + two_decimals(gamma),
                                         local_error_probe(id, z, p, 0.0),
                                         bound));
    }
    {
      const RoughPath p = build_bm_lift(splitmix64(base ^ 0x6f72646572ull),
                                        TimeGrid(0.0, 1.0, 513), 1, gamma, 8);
      const ControlledPath z = lifted_observable(p, std::sin, std::cos);
      rep.criteria.push_back(check_lower("order/bm-" + two_decimals(gamma),
                                         local_error_probe(id, z, p, 0.0),
                                         bound));
    }
  }
}

void check_smoothing(Report& rep) {
  const SpectralOperator op = SpectralOperator::preset_parabolic(1, 0.0, 64);
  const std::size_t N = 64;
  Coeffs x(N, 0.0);
  x[0] = 1.0;
  x[20] = -0.5;
  x[45] = 0.25;
  x[63] = 0.1;

  // The first-estimate constant must not depend on how the t-axis is sampled;
  // the three grids are deliberately non-nested.
  auto log_grid = [](double lo, double hi, int count) {
    std::vector<double> ts(count);
    for (int i = 0; i < count; ++i)
      ts[i] = lo * std::pow(hi / lo, double(i) / double(count - 1));
    return ts;
  };
  double cmin = 0.0, cmax = 0.0;
  bool first = true;
  for (const auto& [lo, hi, count] :
       {std::tuple{0.01, 2.0, 17}, {0.012, 1.7, 23}, {0.009, 2.3, 41}}) {
    const double c = smoothing_check(op, log_grid(lo, hi, count), 0.5, 0.0, x);
    cmin = first ? c : std::min(cmin, c);
    cmax = first ? c : std::max(cmax, c);
    first = false;
  }
  rep.add_metric("smoothing_constant", cmax);
  rep.criteria.push_back(
      check_upper("smoothing/stability", (cmax - cmin) / cmax, 0.10));

  // Difference-estimate exponent, recovered from the operator constant on a
  // window where the maximizing mode is interior.
  const double gamma_t = 0.5;
  std::vector<double> lt, lm;
  Coeffs e(N, 0.0);
  for (int i = 0; i < 12; ++i) {
    const double t = 3e-3 * std::pow(100.0, double(i) / 11.0);
    double worst = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      e[k] = 1.0;
      worst = std::max(
          worst, smoothing_difference_check(op, {t}, gamma_t, 0.5, e));
      e[k] = 0.0;
    }
    lt.push_back(std::log(t));
    lm.push_back(std::log(worst * std::pow(t, gamma_t)));
  }
  const double slope = ls_slope(lt, lm);
  rep.add_metric("smoothing_exponent", slope);
  rep.criteria.push_back(
      check_upper("smoothing/exponent", std::abs(slope - gamma_t), 0.10));
}

double lin_drift_w(double t) { return 0.3 * std::sin(kTwoPi * t) + 0.2 * t; }

void check_solver(std::uint64_t master, Report& rep) {
  SolveConfig cfg;
  cfg.gamma = 0.45;
  cfg.eta = 0.1;
  cfg.picard_tol = 1e-9;
  cfg.max_picard = 60;
  cfg.integrator_tol = 1e-11;

  {  // zero right-hand side: exact semigroup orbit
    const SpectralOperator op = SpectralOperator::preset_parabolic(1, -0.5, 4);
    const RoughPath p = smooth_scalar(129, 0.45, sin2_fn, 8);
    const Nonlinearity z0 = Nonlinearity::zero(4, 1);
    const Coeffs xi = {0.8, -0.5, 0.3, 0.1};
    const SolutionTrajectory traj = solve_global(op, z0, z0, xi, p, 1.0, cfg);
    double worst = 0.0;
    for (const ControlledPath& seg : traj.segments)
      for (std::size_t j = 0; j < seg.grid.n_points(); ++j)
        for (std::size_t k = 0; k < 4; ++k) {
          const double expect =
              std::exp(op.eigenvalue(int(k)) * seg.grid.point(j)) * xi[k];
          worst = std::max(worst, std::abs(seg.y_at(j, 0)[k] - expect));
        }
    rep.criteria.push_back(check_upper("solver/zero-rhs", worst, 1e-13));
  }

  {  // scalar linear-diffusion case against a dense classical integrator
    const double lam = -1.0, c = 0.4, xi0 = 0.8;
    const SpectralOperator op({lam});
    const RoughPath p = smooth_scalar(1025, 0.45, lin_drift_w, 8);
    const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 1, 1, 0.5);
    const Nonlinearity g = Nonlinearity::linear({c}, 1);
    const SolutionTrajectory traj = solve_global(op, f, g, {xi0}, p, 1.0, cfg);

    auto rhs = [&](double t, double y) {
      const double wdot = 0.3 * kTwoPi * std::cos(kTwoPi * t) + 0.2;
      return lam * y + 0.5 * (y * y / (1.0 + y * y)) + c * y * wdot;
    };
    double y = xi0;
    const double h = 1e-4;
    for (int i = 0; i < 10000; ++i) {
      const double t = double(i) * h;
      const double k1 = rhs(t, y);
      const double k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
      const double k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
      const double k4 = rhs(t + h, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    rep.criteria.push_back(
        check_upper("solver/linear-oracle", std::abs(traj.value_at(1.0)[0] - y),
                    1e-5));
  }

  const SpectralOperator op4 = SpectralOperator::preset_parabolic(1, -0.5, 4);
  const Nonlinearity f4 = Nonlinearity::collocation("quadratic_sat", 4, 1, 0.5);
  const Nonlinearity g4 = Nonlinearity::collocation("tanh", 4, 1, 0.4);
  const Coeffs xi4 = {0.4, -0.2, 0.15, 0.1};

  {  // Chasles: restarting halfway lands on the direct solve
    const RoughPath p = smooth_scalar(129, 0.45, sin2_fn, 8);
    const SolutionTrajectory direct = solve_global(op4, f4, g4, xi4, p, 1.0, cfg);
    const SolutionTrajectory half = solve_global(op4, f4, g4, xi4, p, 0.5, cfg);
    const RoughPath rest = window(shift(p, 0.5), 0.0, 0.5);
    const SolutionTrajectory cont = solve_global(
        op4, f4, g4, half.value_at(0.5), rest, 0.5, cfg);
    double dist = 0.0;
    const Coeffs a = direct.value_at(1.0), b = cont.value_at(0.5);
    for (std::size_t k = 0; k < 4; ++k) dist += (a[k] - b[k]) * (a[k] - b[k]);
    rep.criteria.push_back(check_upper("solver/chasles", std::sqrt(dist),
                                       5.0 * cfg.picard_tol));
  }

  {  // every segment closes the mild equation against the integrators
    const std::uint64_t seed = sub_seed(master, "probes") ^ 0x6d696c64ull;
    const RoughPath p =
        build_bm_lift(splitmix64(seed), TimeGrid(0.0, 1.0, 257), 1, 0.45, 8);
    const SolutionTrajectory traj = solve_global(op4, f4, g4, xi4, p, 1.0, cfg);
    double worst = 0.0;
    for (const ControlledPath& seg : traj.segments) {
      const RoughPath pw = window(p, seg.grid.t0(), seg.grid.t1());
      const ControlledPath z = compose(g4, seg, pw, op4);
      std::vector<double> fv(pw.n() * 4);
      for (std::size_t j = 0; j < pw.n(); ++j)
        f4.eval(seg.y_at(j, 0), fv.data() + j * 4);
      const Coeffs x0(seg.y_at(0, 0), seg.y_at(0, 0) + 4);
      const std::size_t last = pw.n() - 1;
      for (const std::size_t j : {last / 2, last}) {
        if (j == 0) continue;
        const double t0 = pw.grid.t0(), t = pw.grid.point(j);
        const Coeffs drift = duhamel_drift(op4, pw.grid, fv, t0, t);
        const Coeffs conv =
            rough_convolution(op4, z, pw, t0, t, cfg.integrator_tol).value;
        double res = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
          const double mild =
              std::exp(op4.eigenvalue(int(k)) * (t - t0)) * x0[k] + drift[k] +
              conv[k];
          res += (seg.y_at(j, 0)[k] - mild) * (seg.y_at(j, 0)[k] - mild);
        }
        worst = std::max(worst, std::sqrt(res));
      }
    }
    rep.criteria.push_back(
        check_upper("solver/mild-residual", worst, 2.0 * cfg.picard_tol));
  }
}

void check_cocycle(std::uint64_t master, Report& rep) {
  SolveConfig cfg;
  cfg.gamma = 0.45;
  cfg.eta = 0.1;
  cfg.picard_tol = 1e-9;
  cfg.max_picard = 60;
  cfg.integrator_tol = 1e-11;

  const SpectralOperator op = SpectralOperator::preset_parabolic(1, -0.5, 4);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 4, 1, 0.5);
  const Nonlinearity g = Nonlinearity::collocation("tanh", 4, 1, 0.4);
  const Coeffs xi = {0.4, -0.2, 0.15, 0.1};

  auto sweep = [&](const RoughPath& p) {
    double worst = 0.0;
    for (const double t : {0.25, 0.5})
      for (const double s : {0.25, 0.5})
        worst = std::max(worst,
                         cocycle_eval(op, f, g, xi, p, t, s, cfg).defect);
    return worst;
  };

  {
    const TimeGrid target(0.0, 1.5, 97);
    const TimeGrid fine = target.refined(16);
    std::vector<double> sm(fine.n_points());
    for (std::size_t i = 0; i < fine.n_points(); ++i)
      sm[i] = sin2_fn(fine.point(i));
    const RoughPath p = build_smooth_lift(fine, sm, 1, target, 0.45);
    rep.criteria.push_back(
        check_upper("cocycle/smooth", sweep(p), 10.0 * cfg.picard_tol));
  }
  {
    const std::uint64_t seed = sub_seed(master, "probes") ^ 0x636f6379ull;
    const RoughPath p = build_bm_lift(splitmix64(seed),
                                      TimeGrid(0.0, 1.5, 193), 1, 0.45, 8);
    rep.criteria.push_back(
        check_upper("cocycle/bm", sweep(p), 10.0 * cfg.picard_tol));
  }
}

void check_gap(std::uint64_t master, Report& rep) {
  LPConfig cfg;
  cfg.alpha = 2.0;
  cfg.beta = 1.0;
  cfg.delta = 0.5;
  cfg.gamma = 0.45;
  cfg.eta = 0.1;
  cfg.K = 0.04;
  cfg.K_max = 5;
  cfg.lp_tol = 1e-8;
  cfg.max_lp_iters = 30;

  const auto [value, ok] = gap_condition(cfg, cfg.gap_C);
  rep.criteria.push_back(check_upper("gap/value", value, 0.5));
  rep.add_metric("gap_ok", ok ? 1.0 : 0.0);

  // Two-mode toy under the admissible budget: the transform must contract at
  // the predicted rate and converge quickly.
  const SpectralOperator op({2.0, -1.0}, 2.0, 1.0);
  const std::uint64_t seed = sub_seed(master, "probes") ^ 0x67617021ull;
  const RoughPath p = build_bm_lift(splitmix64(seed),
                                    TimeGrid(-5.0, 1.0, 6 * 32 + 1), 1, 0.45, 8);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 2, 1, 0.05);
  const Nonlinearity g = Nonlinearity::collocation("sin_minus_id", 2, 1, 0.005);
  const LPFixedPoint fp = lp_fixed_point(op, f, g, unstable_vec(op, 0.1), p, cfg);
  double rate = 0.0;
  for (double r : fp.rates) rate = std::max(rate, r);
  rep.criteria.push_back(check_upper("gap/contraction-rate", rate, 0.55));
  rep.criteria.push_back(
      check_upper("gap/iterations", double(fp.iterations), 25.0));
}

void check_tangency(Report& rep) {
  const SpectralOperator op({2.0, -1.0, -3.0}, 2.0, 1.0);
  LPConfig cfg;
  cfg.alpha = 2.0;
  cfg.beta = 1.0;
  cfg.delta = 0.5;
  cfg.gamma = 0.45;
  cfg.eta = 0.1;
  cfg.K = 1.0;
  cfg.enforce_gap = false;
  cfg.K_max = 6;
  cfg.lp_tol = 1e-9;
  cfg.max_lp_iters = 60;

  const TimeGrid target(-6.0, 0.0, 6 * 32 + 1);
  const TimeGrid fine = target.refined(4);
  const RoughPath p = build_smooth_lift(
      fine, std::vector<double>(fine.n_points(), 0.0), 1, target, 0.45);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 1.2);
  const Nonlinearity g = Nonlinearity::zero(3, 1);

  double h_origin = 0.0;
  std::vector<double> slopes;
  for (const double r : {0.1, 0.05, 0.025}) {
    const ManifoldGraph graph = build_manifold(op, f, g, p, cfg, r, 3);
    double slope = 0.0;
    for (const GraphSample& s : graph.samples) {
      if (!s.converged) continue;
      if (s.xi_u[0] == 0.0) {
        for (double v : s.h_u) h_origin = std::max(h_origin, std::abs(v));
        continue;
      }
      double hn = 0.0;
      for (double v : s.h_u) hn += v * v;
      slope = std::max(slope, std::sqrt(hn) / std::abs(s.xi_u[0]));
    }
    slopes.push_back(slope);
  }
  rep.criteria.push_back(check_upper("tangency/origin", h_origin, 0.0));
  double ratio = 0.0;
  for (std::size_t i = 0; i + 1 < slopes.size(); ++i)
    ratio = std::max(ratio, slopes[i] > 0.0 ? slopes[i + 1] / slopes[i] : 1.0);
  rep.criteria.push_back(check_upper("tangency/slopes", ratio, 0.999,
                                     "secant slope ratio across shrinking radii"));
  rep.add_metric("tangency_slope_widest", slopes.empty() ? 0.0 : slopes[0]);
}

const std::vector<std::string>& known_groups() {
  static const std::vector<std::string> g = {
      "chen",   "quadrature", "order", "smoothing",
      "solver", "cocycle",    "gap",   "tangency"};
  return g;
}

}  // namespace

Report cmd_verify(const RunConfig& rc) {
  const VerifyParams vp = rc.verify.value_or(VerifyParams{});
  for (const std::string& c : vp.checks) {
    const auto& known = known_groups();
    if (std::find(known.begin(), known.end(), c) == known.end()) {
      std::string msg = "[verify] checks: unknown group '" + c + "' (expected";
      for (const std::string& k : known) msg += " " + k;
      throw ConfigError(msg + ")");
    }
  }
  auto want = [&](const char* group) {
    return vp.checks.empty() ||
           std::find(vp.checks.begin(), vp.checks.end(), group) !=
               vp.checks.end();
  };

  Report rep;
  rep.command = "verify";
  if (want("chen")) check_chen(vp, rc.seed, rep);
  if (want("quadrature")) check_quadrature(vp, rc.seed, rep);
  if (want("order")) check_order(rc.seed, rep);
  if (want("smoothing")) check_smoothing(rep);
  if (want("solver")) check_solver(rc.seed, rep);
  if (want("cocycle")) check_cocycle(rc.seed, rep);
  if (want("gap")) check_gap(rc.seed, rep);
  if (want("tangency")) check_tangency(rep);

  ensure_out_dir(rc);
  rep.artifacts.push_back("verify_report.json");
  if (rc.format == "csv") {
    std::ostringstream csv;
    csv << "name,measured,bound,kind,pass\n";
    for (const CriterionResult& c : rep.criteria)
      csv << c.name << "," << io::format_double(c.measured) << ","
          << io::format_double(c.bound) << ","
          << (c.kind == CriterionResult::Bound::upper ? "upper" : "lower")
          << "," << (c.pass ? 1 : 0) << "\n";
    io::write_file(join_path(rc.out_dir, "criteria.csv"), csv.str());
    rep.artifacts.push_back("criteria.csv");
  }
  write_report(rep, rc.out_dir, "verify_report.json");
  write_manifest(rc, rep);
  return rep;
}

Report cmd_probe_order(const RunConfig& rc) {
  const ProbeParams pp = rc.probe.value_or(ProbeParams{});
  Report rep;
  rep.command = "probe-order";

  const SpectralOperator id({0.0});
  const std::uint64_t base = sub_seed(rc.seed, "probes");
  struct Row {
    std::string kind;
    double gamma, beta, slope, threshold;
    bool asserted, pass;
  };
  std::vector<Row> rows;

  for (const std::string& kind : pp.drivers) {
    for (const double gamma : pp.gammas) {
      RoughPath p = kind == "smooth"
                        ? smooth_scalar(std::size_t(pp.n_points), gamma,
                                        sin2_fn, 16)
                        : build_bm_lift(
                              splitmix64(base ^ 0x6f72646572ull),
                              TimeGrid(0.0, 1.0, std::size_t(pp.n_points)), 1,
                              gamma, 8);
      const ControlledPath z = lifted_observable(p, std::sin, std::cos);
      for (const double beta : pp.betas) {
        const double slope = local_error_probe(id, z, p, beta);
        Row row;
        row.kind = kind;
        row.gamma = gamma;
        row.beta = beta;
        row.slope = slope;
        row.asserted = beta == 0.0;
        row.threshold = row.asserted ? 3.0 * gamma - 0.15 : 0.0;
        row.pass = !row.asserted || slope >= row.threshold;
        rows.push_back(row);
        const std::string tag = kind + "-" + two_decimals(gamma);
        if (row.asserted)
          rep.criteria.push_back(
              check_lower("order/" + tag, slope, row.threshold));
        else
          rep.add_metric("slope/" + tag + "-beta" + two_decimals(beta), slope);
      }
    }
  }

  ensure_out_dir(rc);
  if (rc.format == "csv") {
    std::ostringstream csv;
    csv << "driver,gamma,beta,slope,threshold,asserted,pass\n";
    for (const Row& r : rows)
      csv << r.kind << "," << io::format_double(r.gamma) << ","
          << io::format_double(r.beta) << "," << io::format_double(r.slope)
          << "," << io::format_double(r.threshold) << "," << (r.asserted ? 1 : 0)
          << "," << (r.pass ? 1 : 0) << "\n";
    io::write_file(join_path(rc.out_dir, "slopes.csv"), csv.str());
    rep.artifacts.push_back("slopes.csv");
  } else {
    json arr = json::array();
    for (const Row& r : rows)
      arr.push_back({{"driver", r.kind},
                     {"gamma", r.gamma},
                     {"beta", r.beta},
                     {"slope", r.slope},
                     {"threshold", r.threshold},
                     {"asserted", r.asserted},
                     {"pass", r.pass}});
    json doc;
    doc["format"] = "order-probe/1";
    doc["rows"] = std::move(arr);
    io::write_file(join_path(rc.out_dir, "slopes.json"), doc.dump(2) + "\n");
    rep.artifacts.push_back("slopes.json");
  }
  rep.artifacts.push_back("probe_report.json");
  write_report(rep, rc.out_dir, "probe_report.json");
  write_manifest(rc, rep);
  return rep;
}

}  // namespace roughflow
