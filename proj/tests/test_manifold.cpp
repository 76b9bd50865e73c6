#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "roughflow/controlled_path.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/kernels.hpp"
#include "roughflow/manifold.hpp"
#include "roughflow/nonlinearity.hpp"
#include "roughflow/ree_solver.hpp"
#include "roughflow/rough_path.hpp"
#include "roughflow/spectral_operator.hpp"
#include "roughflow/time_grid.hpp"

using namespace roughflow;

namespace {

// One unstable mode at 2; stable ladder at -1 (and -3 for the 3-mode variant).
SpectralOperator gap_op2() {
  return SpectralOperator({2.0, -1.0}, 2.0, 1.0);
}
SpectralOperator gap_op3() {
  return SpectralOperator({2.0, -1.0, -3.0}, 2.0, 1.0);
}

LPConfig lp_cfg(int k_max = 6) {
  LPConfig c;
  c.alpha = 2.0;
  c.beta = 1.0;
  c.delta = 0.5;
  c.gamma = 0.45;
  c.eta = 0.1;
  c.K = 0.02;
  c.K_max = k_max;
  c.lp_tol = 1e-9;
  c.max_lp_iters = 60;
  return c;
}

RoughPath sampled_driver(double t_lo, double t_hi, std::size_t per_unit,
                         double (*f)(double), double gamma = 0.45) {
  const std::size_t n =
      static_cast<std::size_t>(std::llround((t_hi - t_lo) * double(per_unit))) + 1;
  const TimeGrid target(t_lo, t_hi, n);
  const TimeGrid fine = target.refined(4);
  std::vector<double> s(fine.n_points());
  for (std::size_t i = 0; i < fine.n_points(); ++i) s[i] = f(fine.point(i));
  return build_smooth_lift(fine, s, 1, target, gamma);
}

double zero_fn(double) { return 0.0; }
double line_fn(double t) { return t; }

std::vector<double> unstable_xi(const SpectralOperator& op, double v) {
  std::vector<double> xi(static_cast<std::size_t>(op.n_modes()), 0.0);
  xi[0] = v;
  return xi;
}

double vec_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

// Dense-grid solve of the deterministic two-sided integral equation for the
// unstable-manifold trajectory through xi (drift only):
//   y(tau) = e^{lam_u tau} xi + int_0^tau e^{lam_u (tau-u)} f_u(y) du
//            + sum_stable int_{-inf}^tau e^{lam_k (tau-u)} f_k(y) du,
// iterated to a fixed point with trapezoid quadrature and exponential
// recursions. Returns the stable components at tau = 0.
std::vector<double> classical_graph(const SpectralOperator& op,
                                    const Nonlinearity& f, double xi,
                                    double t_deep, std::size_t per_unit) {
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const std::size_t M =
      static_cast<std::size_t>(std::llround(t_deep * double(per_unit)));
  const double hc = 1.0 / double(per_unit);
  const double lu = op.eigenvalue(0);

  std::vector<double> y((M + 1) * N, 0.0), fval((M + 1) * N, 0.0);
  for (std::size_t j = 0; j <= M; ++j)
    y[j * N] = std::exp(lu * (-double(j) * hc)) * xi;

  std::vector<double> U(M + 1), V(M + 1);
  for (int sweep = 0; sweep < 200; ++sweep) {
    for (std::size_t j = 0; j <= M; ++j)
      f.eval(y.data() + j * N, fval.data() + j * N);

    double change = 0.0;
    // unstable component: integrate from 0 down
    U[0] = 0.0;
    {
      const double e = std::exp(-lu * hc);
      for (std::size_t j = 0; j < M; ++j)
        U[j + 1] =
            e * (U[j] - 0.5 * hc * fval[j * N]) - 0.5 * hc * fval[(j + 1) * N];
    }
    for (std::size_t j = 0; j <= M; ++j) {
      const double v = std::exp(lu * (-double(j) * hc)) * xi + U[j];
      change = std::max(change, std::abs(v - y[j * N]));
      y[j * N] = v;
    }
    // stable components: integrate up from the deep end
    for (std::size_t k = 1; k < N; ++k) {
      const double ls = op.eigenvalue(static_cast<int>(k));
      const double e = std::exp(ls * hc);
      V[M] = fval[M * N + k] / (-ls);
      for (std::size_t j = M; j > 0; --j)
        V[j - 1] = e * V[j] + 0.5 * hc * (fval[(j - 1) * N + k] + e * fval[j * N + k]);
      for (std::size_t j = 0; j <= M; ++j) {
        change = std::max(change, std::abs(V[j] - y[j * N + k]));
        y[j * N + k] = V[j];
      }
    }
    if (change <= 1e-12) break;
  }
  std::vector<double> h(N, 0.0);
  for (std::size_t k = 1; k < N; ++k) h[k] = y[k];
  return h;
}

}  // namespace

TEST_CASE("gap condition value") {
  LPConfig c = lp_cfg();

  SUBCASE("frozen bracket at the reference rates") {
    // alpha=2, beta=1, delta=1/2, C=1. Independently evaluated closed form.
    c.K = 1.0;
    const auto [value, ok] = gap_condition(c, 1.0);
    CHECK(std::abs(value - 10.4032596246) <= 1e-9);
    CHECK_FALSE(ok);
    CHECK(std::abs(gap_condition(c, 2.0).first - 14.0376132620) <= 1e-9);
    c.alpha = 3.0;
    c.beta = 0.5;
    c.delta = 1.25;
    CHECK(std::abs(gap_condition(c, 1.0).first - 10.0101967384) <= 1e-9);
  }

  SUBCASE("admissible budget clears the threshold") {
    c.K = 0.048;  // just below 0.5 / 10.4032596246 = 0.0480618...
    const auto [value, ok] = gap_condition(c, 1.0);
    CHECK(value <= 0.5);
    CHECK(ok);
    c.K = 0.0;
    CHECK(gap_condition(c, 1.0).first == 0.0);
    CHECK(gap_condition(c, 1.0).second);
  }

  SUBCASE("monotone in the budget and the embedding constant") {
    c.K = 0.01;
    double prev = gap_condition(c, 1.0).first;
    for (double K : {0.02, 0.04, 0.08}) {
      c.K = K;
      const double v = gap_condition(c, 1.0).first;
      CHECK(v > prev);
      prev = v;
    }
    c.K = 0.05;
    CHECK(gap_condition(c, 2.0).first > gap_condition(c, 1.0).first);
  }

  SUBCASE("degenerate rates rejected") {
    c.delta = 2.0;  // alpha <= delta
    CHECK_THROWS_AS(gap_condition(c, 1.0), ConfigError);
    c.delta = 2.5;
    CHECK_THROWS_AS(gap_condition(c, 1.0), ConfigError);
  }
}

TEST_CASE("config validation") {
  LPConfig c = lp_cfg();
  CHECK_NOTHROW(c.validate());
  LPConfig bad = c;
  bad.K_max = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = c;
  bad.beta = 2.5;  // alpha must exceed beta
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = c;
  bad.delta = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = c;
  bad.gamma = 0.3;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = c;
  bad.eta = 0.45;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = c;
  bad.K = -1.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = c;
  bad.lp_tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("transform with no nonlinearity is the backward orbit") {
  const SpectralOperator op = gap_op2();
  const LPConfig cfg = lp_cfg(4);
  const RoughPath p = sampled_driver(-4.0, 0.0, 32, zero_fn);
  const Nonlinearity fz = Nonlinearity::zero(2, 1);
  const Nonlinearity gz = Nonlinearity::zero(2, 1);
  const LPSequence zero = zero_sequence(p, 2, cfg);

  SUBCASE("anchored orbit, stable block exactly empty") {
    const std::vector<double> xi = unstable_xi(op, 0.7);
    const LPSequence out = lp_apply(op, fz, gz, zero, xi, p, cfg);
    REQUIRE(out.depth() == 4);
    const std::size_t n = out.pieces[0].grid.n_points();
    for (int s = 0; s < 4; ++s) {
      const ControlledPath& piece = out.pieces[static_cast<std::size_t>(s)];
      for (std::size_t j = 0; j < n; ++j) {
        const double tau = piece.grid.point(j);  // global time in [-s-1, -s]
        const double expect = std::exp(2.0 * tau) * 0.7;
        CHECK(std::abs(piece.y_at(j, 0)[0] - expect) <=
              1e-13 * std::max(1.0, std::abs(expect)));
        CHECK(piece.y_at(j, 0)[1] == 0.0);
        CHECK(piece.yp_at(j, 0, 0)[0] == 0.0);
        CHECK(piece.yp_at(j, 0, 0)[1] == 0.0);
      }
    }
  }

  SUBCASE("zero anchor stays exactly zero") {
    const std::vector<double> xi(2, 0.0);
    const LPSequence out = lp_apply(op, fz, gz, zero, xi, p, cfg);
    for (const ControlledPath& piece : out.pieces) {
      for (double v : piece.y) CHECK(v == 0.0);
      for (double v : piece.yp) CHECK(v == 0.0);
    }
  }

  SUBCASE("seams are copied exactly") {
    const std::vector<double> xi = unstable_xi(op, 1.3);
    const LPSequence out = lp_apply(op, fz, gz, zero, xi, p, cfg);
    const std::size_t last = out.pieces[0].grid.n_points() - 1;
    for (int s = 0; s + 1 < 4; ++s) {
      const ControlledPath& a = out.pieces[static_cast<std::size_t>(s)];
      const ControlledPath& b = out.pieces[static_cast<std::size_t>(s + 1)];
      CHECK(a.y_at(0, 0)[0] == b.y_at(last, 0)[0]);
      CHECK(a.y_at(0, 0)[1] == b.y_at(last, 0)[1]);
    }
  }
}

TEST_CASE("linear diffusion reproduces the variation-of-constants expansion") {
  // Driver w(t) = t, diagonal g(y) = c y. Starting from zero, two passes
  // produce the first-order expansion e^{lam tau} (1 + c tau) xi on the
  // unstable mode: the one-sweep integrals are exact for exponential
  // integrands against this driver, so agreement is near rounding.
  const SpectralOperator op = gap_op2();
  const LPConfig cfg = lp_cfg(4);
  const RoughPath p = sampled_driver(-4.0, 0.0, 32, line_fn);
  const Nonlinearity fz = Nonlinearity::zero(2, 1);
  const double cu = 0.3, cs = 0.25;
  const Nonlinearity g = Nonlinearity::linear({cu, cs}, 1);
  const std::vector<double> xi = unstable_xi(op, 0.7);

  const LPSequence zero = zero_sequence(p, 2, cfg);
  const LPSequence seq1 = lp_apply(op, fz, g, zero, xi, p, cfg);
  const LPSequence seq2 = lp_apply(op, fz, g, seq1, xi, p, cfg);

  const std::size_t n = seq2.pieces[0].grid.n_points();
  for (int s = 0; s < 4; ++s) {
    const ControlledPath& piece = seq2.pieces[static_cast<std::size_t>(s)];
    const ControlledPath& prev = seq1.pieces[static_cast<std::size_t>(s)];
    for (std::size_t j = 0; j < n; ++j) {
      const double tau = piece.grid.point(j);
      const double expect = std::exp(2.0 * tau) * (1.0 + cu * tau) * 0.7;
      CHECK(std::abs(piece.y_at(j, 0)[0] - expect) <= 1e-12);
      CHECK(piece.y_at(j, 0)[1] == 0.0);
      // derivative part is the diffusion of the input sequence
      CHECK(piece.yp_at(j, 0, 0)[0] == cu * prev.y_at(j, 0)[0]);
      CHECK(piece.yp_at(j, 0, 0)[1] == cs * prev.y_at(j, 0)[1]);
    }
  }
}

TEST_CASE("fixed point") {
  const SpectralOperator op = gap_op2();
  const LPConfig cfg = lp_cfg(4);
  const RoughPath p = sampled_driver(-4.0, 0.0, 32, zero_fn);
  const Nonlinearity fz = Nonlinearity::zero(2, 1);
  const Nonlinearity gz = Nonlinearity::zero(2, 1);

  SUBCASE("zero data converges immediately") {
    const LPFixedPoint fp =
        lp_fixed_point(op, fz, gz, std::vector<double>(2, 0.0), p, cfg);
    CHECK(fp.iterations == 1);
    CHECK(fp.final_distance == 0.0);
    CHECK(fp.rates.empty());
    CHECK(fp.gap_ok);
  }

  SUBCASE("orbit data is already the fixed point") {
    // The iteration is seeded with the anchored orbit, so with no
    // nonlinearity the first corrective sweep changes nothing.
    const LPFixedPoint fp =
        lp_fixed_point(op, fz, gz, unstable_xi(op, 0.9), p, cfg);
    CHECK(fp.iterations == 1);
    CHECK(fp.final_distance == 0.0);
  }

  SUBCASE("gap enforcement") {
    LPConfig loud = cfg;
    loud.K = 1.0;  // value ~ 10.4, far beyond 1/2
    CHECK_THROWS_AS(
        lp_fixed_point(op, fz, gz, unstable_xi(op, 0.5), p, loud),
        AssumptionError);
    loud.enforce_gap = false;
    CHECK_NOTHROW(lp_fixed_point(op, fz, gz, unstable_xi(op, 0.5), p, loud));
  }

  SUBCASE("iteration cap carries the distance trace") {
    LPConfig tight = cfg;
    tight.lp_tol = 1e-300;
    tight.max_lp_iters = 3;
    tight.enforce_gap = false;
    const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 2, 1, 0.4);
    try {
      lp_fixed_point(op, f, gz, unstable_xi(op, 0.4), p, tight);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.residual_trace.size() == 3);
    }
  }
}

TEST_CASE("contraction under an admissible budget") {
  // Rough driver, both nonlinearities on, budget inside the admissible range:
  // the measured rates must stay well under the abort threshold.
  const SpectralOperator op = gap_op3();
  LPConfig cfg = lp_cfg(6);
  cfg.K = 0.04;  // gap value 0.04 * 10.403 = 0.416 <= 1/2
  cfg.lp_tol = 1e-8;
  cfg.max_lp_iters = 30;
  const TimeGrid grid(-6.0, 1.0, 7 * 32 + 1);
  const RoughPath p = build_bm_lift(11, grid, 1, 0.45, 8);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 0.05);
  const Nonlinearity g = Nonlinearity::collocation("sin_minus_id", 3, 1, 0.005);

  const LPFixedPoint fp = lp_fixed_point(op, f, g, unstable_xi(op, 0.1), p, cfg);
  CHECK(fp.gap_ok);
  CHECK(fp.iterations <= 25);
  REQUIRE(!fp.rates.empty());
  for (double r : fp.rates) CHECK(r <= 0.55);

  SUBCASE("graph extraction routes agree at the fixed point") {
    const GraphExtraction ge =
        extract_graph(op, f, g, fp, unstable_xi(op, 0.1), p, cfg);
    CHECK(ge.mismatch <= cfg.lp_tol);
    CHECK(vec_dist(ge.h_direct, ge.h_series) == ge.mismatch);
    CHECK(ge.h_direct[0] == 0.0);  // stable projection
  }

  SUBCASE("base-point Lipschitz stays under the gap bound") {
    const LPFixedPoint fpb =
        lp_fixed_point(op, f, g, unstable_xi(op, 0.12), p, cfg);
    const double num = sequence_distance(op, fp.seq, fpb.seq, p, cfg);
    // 2 C e^{alpha-delta} with C = 1 at these rates
    CHECK(num / 0.02 <= 2.0 * std::exp(1.5));
  }
}

TEST_CASE("quadratic toy matches the classical dense-grid graph") {
  // Three modes: the sine collocation couples the unstable mode into the
  // stable ones at second order. Drift only, so the grid machinery reduces
  // to the deterministic Lyapunov-Perron equation, solved independently on a
  // denser grid over a longer history.
  const SpectralOperator op = gap_op3();
  LPConfig cfg = lp_cfg(12);
  cfg.K = 1.0;
  cfg.enforce_gap = false;  // formal budget is deliberately generous
  cfg.lp_tol = 1e-10;
  const RoughPath p = sampled_driver(-12.0, 1.0, 64, zero_fn);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 1.2);
  const Nonlinearity g = Nonlinearity::zero(3, 1);

  const ManifoldGraph graph = build_manifold(op, f, g, p, cfg, 0.2, 3);
  REQUIRE(graph.samples.size() == 3);
  CHECK(graph.radius == doctest::Approx(0.2));
  CHECK(graph.cutoff.R == 1.0);

  for (const GraphSample& s : graph.samples) {
    REQUIRE(s.converged);
    if (s.xi_u[0] == 0.0) {
      for (double v : s.h_u) CHECK(v == 0.0);
      continue;
    }
    const std::vector<double> ref = classical_graph(op, f, s.xi_u[0], 14.0, 512);
    CHECK(std::abs(s.h_u[1] - ref[1]) <= 1e-4);
    CHECK(std::abs(s.h_u[2] - ref[2]) <= 1e-4);
    CHECK(std::abs(s.h_u[2]) >= 3e-4);  // the graph really bends
  }
  CHECK(graph.lipschitz_estimate > 0.0);
  CHECK(std::abs(graph.k_admissible - 0.0480618593) <= 1e-9);
}

TEST_CASE("trivial graphs") {
  const SpectralOperator op = gap_op2();
  LPConfig cfg = lp_cfg(4);
  const RoughPath p = sampled_driver(-4.0, 1.0, 32, zero_fn);

  SUBCASE("origin-only mesh") {
    const Nonlinearity f = Nonlinearity::collocation("cubic_sat", 2, 1, 0.3);
    const ManifoldGraph graph = build_manifold(op, f, Nonlinearity::zero(2, 1),
                                               p, cfg, 0.1, 1);
    REQUIRE(graph.samples.size() == 1);
    CHECK(graph.samples[0].converged);
    for (double v : graph.samples[0].xi_u) CHECK(v == 0.0);
    for (double v : graph.samples[0].h_u) CHECK(v == 0.0);
    CHECK(graph.lipschitz_estimate == 0.0);
  }

  SUBCASE("diagonal linear drift leaves the unstable plane flat") {
    // Mode-diagonal drift never sources the stable block from unstable data.
    const Nonlinearity f = Nonlinearity::linear({-0.3, -0.2}, 1);
    const ManifoldGraph graph = build_manifold(op, f, Nonlinearity::zero(2, 1),
                                               p, cfg, 0.1, 5);
    REQUIRE(graph.samples.size() == 5);
    for (const GraphSample& s : graph.samples) {
      REQUIRE(s.converged);
      for (double v : s.h_u) CHECK(v == 0.0);
    }
    CHECK(graph.lipschitz_estimate == 0.0);
  }

  SUBCASE("failed samples are annotated, not fatal") {
    LPConfig strangled = cfg;
    strangled.max_lp_iters = 1;
    const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 2, 1, 0.5);
    const ManifoldGraph graph = build_manifold(
        op, f, Nonlinearity::zero(2, 1), p, strangled, 0.1, 3);
    REQUIRE(graph.samples.size() == 3);
    int failed = 0;
    for (const GraphSample& s : graph.samples) {
      if (s.xi_u[0] == 0.0) {
        CHECK(s.converged);  // the origin is a fixed point of the first pass
      } else {
        CHECK_FALSE(s.converged);
        CHECK(!s.note.empty());
        ++failed;
      }
    }
    CHECK(failed == 2);
  }
}

TEST_CASE("tangency: secant slope decays with the mesh radius") {
  const SpectralOperator op = gap_op3();
  LPConfig cfg = lp_cfg(8);
  cfg.K = 1.0;
  cfg.enforce_gap = false;
  const RoughPath p = sampled_driver(-8.0, 0.0, 64, zero_fn);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 1.2);
  const Nonlinearity g = Nonlinearity::zero(3, 1);

  std::vector<double> slopes;
  for (double r : {0.1, 0.05, 0.025}) {
    const ManifoldGraph graph = build_manifold(op, f, g, p, cfg, r, 3);
    double slope = 0.0;
    for (const GraphSample& s : graph.samples) {
      if (!s.converged || s.xi_u[0] == 0.0) continue;
      slope = std::max(slope, std::sqrt(kernels::normsq(s.h_u.data(), 3)) /
                                  std::abs(s.xi_u[0]));
    }
    CHECK(slope > 0.0);
    slopes.push_back(slope);
  }
  CHECK(slopes[1] < slopes[0]);
  CHECK(slopes[2] < slopes[1]);
}

TEST_CASE("doubling the history depth moves the graph less than the tail bound") {
  const SpectralOperator op = gap_op3();
  const RoughPath p = sampled_driver(-12.0, 0.0, 64, zero_fn);
  const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 1.2);
  const Nonlinearity g = Nonlinearity::zero(3, 1);
  const std::vector<double> xi = unstable_xi(op, 0.1);

  LPConfig c6 = lp_cfg(6);
  c6.K = 1.0;
  c6.enforce_gap = false;
  c6.lp_tol = 1e-10;
  LPConfig c12 = c6;
  c12.K_max = 12;

  const LPFixedPoint fp6 = lp_fixed_point(op, f, g, xi, p, c6);
  const LPFixedPoint fp12 = lp_fixed_point(op, f, g, xi, p, c12);
  const GraphExtraction g6 = extract_graph(op, f, g, fp6, xi, p, c6);
  const GraphExtraction g12 = extract_graph(op, f, g, fp12, xi, p, c12);

  CHECK(fp6.tail_bound > 0.0);
  CHECK(fp12.tail_bound < fp6.tail_bound);
  const double moved = vec_dist(g6.h_direct, g12.h_direct);
  CHECK(moved <= 2.0 * fp6.tail_bound + 10.0 * c6.lp_tol);
}

TEST_CASE("invariance of the sampled graph") {
  SolveConfig scfg;
  scfg.gamma = 0.45;
  scfg.eta = 0.1;
  scfg.picard_tol = 1e-8;
  scfg.max_picard = 60;

  SUBCASE("no nonlinearity: the unstable plane is exactly invariant") {
    const SpectralOperator op = gap_op2();
    const LPConfig cfg = lp_cfg(4);
    const RoughPath p = sampled_driver(-4.0, 1.0, 32, zero_fn);
    const Nonlinearity fz = Nonlinearity::zero(2, 1);
    const ManifoldGraph graph = build_manifold(op, fz, fz, p, cfg, 0.05, 1);
    const InvarianceCheck chk = invariance_defect(
        graph, op, fz, fz, p, unstable_xi(op, 0.04), scfg, 1.0);
    CHECK(chk.defect == 0.0);
    for (double v : chk.h_shifted) CHECK(v == 0.0);
  }

  SUBCASE("origin stays put") {
    const SpectralOperator op = gap_op3();
    LPConfig cfg = lp_cfg(8);
    cfg.K = 1.0;
    cfg.enforce_gap = false;
    const RoughPath p = sampled_driver(-8.0, 1.0, 64, zero_fn);
    const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 1.2);
    const Nonlinearity g = Nonlinearity::zero(3, 1);
    const ManifoldGraph graph = build_manifold(op, f, g, p, cfg, 0.05, 1);
    const InvarianceCheck chk = invariance_defect(
        graph, op, f, g, p, std::vector<double>(3, 0.0), scfg, 1.0);
    CHECK(chk.defect <= 10.0 * cfg.lp_tol);
    CHECK_FALSE(chk.out_of_ball);
  }

  SUBCASE("deterministic toy: defect within the tolerance budget") {
    const SpectralOperator op = gap_op3();
    LPConfig cfg = lp_cfg(16);
    cfg.K = 1.0;
    cfg.enforce_gap = false;
    cfg.lp_tol = 1e-8;
    const RoughPath p = sampled_driver(-16.0, 1.0, 64, zero_fn);
    const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 1.2);
    const Nonlinearity g = Nonlinearity::zero(3, 1);
    const ManifoldGraph graph = build_manifold(op, f, g, p, cfg, 0.1, 1);
    const InvarianceCheck chk = invariance_defect(
        graph, op, f, g, p, unstable_xi(op, 0.008), scfg, 1.0);
    CHECK(chk.defect <= 50.0 * (cfg.lp_tol + scfg.picard_tol));
    CHECK_FALSE(chk.out_of_ball);
  }

  SUBCASE("rough toy: defect within the tolerance budget") {
    const SpectralOperator op = gap_op3();
    LPConfig cfg = lp_cfg(16);
    cfg.K = 0.5;
    cfg.enforce_gap = false;
    cfg.lp_tol = 1e-8;
    const TimeGrid grid(-16.0, 1.0, 17 * 64 + 1);
    const RoughPath p = build_bm_lift(7, grid, 1, 0.45, 8);
    const Nonlinearity f = Nonlinearity::collocation("quadratic_sat", 3, 1, 0.6);
    const Nonlinearity g = Nonlinearity::collocation("sin_minus_id", 3, 1, 0.004);
    const ManifoldGraph graph = build_manifold(op, f, g, p, cfg, 0.1, 1);
    const InvarianceCheck chk = invariance_defect(
        graph, op, f, g, p, unstable_xi(op, 0.008), scfg, 1.0);
    CHECK(chk.defect <= 50.0 * (cfg.lp_tol + scfg.picard_tol));
  }
}

TEST_CASE("mismatched data is rejected") {
  const SpectralOperator op = gap_op2();
  const LPConfig cfg = lp_cfg(4);
  const RoughPath p = sampled_driver(-4.0, 0.0, 32, zero_fn);
  const Nonlinearity fz = Nonlinearity::zero(2, 1);
  const LPSequence zero = zero_sequence(p, 2, cfg);

  SUBCASE("stable mass in the anchor") {
    std::vector<double> xi = {0.5, 1e-6};
    CHECK_THROWS_AS(lp_apply(op, fz, fz, zero, xi, p, cfg), InvalidInput);
  }
  SUBCASE("wrong sequence depth") {
    LPConfig deeper = cfg;
    deeper.K_max = 6;
    const RoughPath p6 = sampled_driver(-6.0, 0.0, 32, zero_fn);
    CHECK_THROWS_AS(
        lp_apply(op, fz, fz, zero, unstable_xi(op, 0.1), p6, deeper),
        InvalidInput);
  }
  SUBCASE("driver too short for the history") {
    LPConfig deeper = cfg;
    deeper.K_max = 8;
    CHECK_THROWS_AS(
        lp_fixed_point(op, fz, fz, unstable_xi(op, 0.1), p, deeper),
        OutOfRange);
  }
  SUBCASE("unit intervals must be grid-aligned") {
    const TimeGrid odd(-4.0, 0.0, 14);  // dt = 2/7
    std::vector<double> s(odd.refined(4).n_points(), 0.0);
    const RoughPath bad = build_smooth_lift(odd.refined(4), s, 1, odd, 0.45);
    CHECK_THROWS_AS(
        lp_fixed_point(op, fz, fz, unstable_xi(op, 0.1), bad, cfg),
        GridMismatch);
  }
  SUBCASE("rates above the operator gap") {
    LPConfig hot = cfg;
    hot.alpha = 2.5;
    CHECK_THROWS_AS(
        lp_fixed_point(op, fz, fz, unstable_xi(op, 0.1), p, hot), ConfigError);
  }
  SUBCASE("operator without both blocks") {
    const SpectralOperator all_stable({-1.0, -2.0}, 2.0, 1.0);
    CHECK_THROWS_AS(
        lp_fixed_point(all_stable, fz, fz, std::vector<double>(2, 0.0), p, cfg),
        ConfigError);
  }
  SUBCASE("diffusion must be stationary to second order") {
    const SpectralOperator op3 = gap_op3();
    const RoughPath p3 = sampled_driver(-4.0, 0.0, 32, zero_fn);
    const Nonlinearity g_lin = Nonlinearity::linear({0.1, 0.1, 0.1}, 1);
    CHECK_THROWS_AS(build_manifold(op3, Nonlinearity::zero(3, 1), g_lin, p3,
                                   cfg, 0.1, 1),
                    AssumptionError);
  }
  SUBCASE("more than two unstable modes") {
    const SpectralOperator wide({2.0, 2.0, 2.0, -1.0}, 2.0, 1.0);
    const TimeGrid grid(-4.0, 0.0, 4 * 32 + 1);
    std::vector<double> s(grid.refined(4).n_points(), 0.0);
    const RoughPath p4 = build_smooth_lift(grid.refined(4), s, 1, grid, 0.45);
    CHECK_THROWS_AS(build_manifold(wide, Nonlinearity::zero(4, 1),
                                   Nonlinearity::zero(4, 1), p4, cfg, 0.1, 3),
                    InvalidConfig);
  }
}
