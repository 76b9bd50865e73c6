#include "roughflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "roughflow/errors.hpp"
#include "roughflow/kernels.hpp"
#include "semigroup_table.hpp"

namespace roughflow {

void LPConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0) || !(alpha > beta))
    throw InvalidConfig("rates must satisfy alpha > beta > 0");
  if (!(delta > 0.0) || !(delta < alpha))
    throw InvalidConfig("delta must lie strictly between 0 and alpha");
  if (!(gamma > 1.0 / 3.0) || !(gamma <= 0.5))
    throw InvalidConfig("gamma must lie in (1/3, 1/2]");
  if (!(eta > 0.0) || !(eta < gamma))
    throw InvalidConfig("eta must lie strictly between 0 and gamma");
  if (!(K >= 0.0)) throw InvalidConfig("the integral budget K must be nonnegative");
  if (!(gap_C > 0.0)) throw InvalidConfig("the embedding constant must be positive");
  if (K_max < 2) throw InvalidConfig("the history depth needs at least two intervals");
  if (!(lp_tol > 0.0)) throw InvalidConfig("lp_tol must be positive");
  if (max_lp_iters < 1) throw InvalidConfig("max_lp_iters must be positive");
}

namespace {

double gap_bracket(const LPConfig& cfg, double C) {
  if (!(cfg.alpha > cfg.delta))
    throw ConfigError("gap rates degenerate: alpha must exceed delta");
  if (!(cfg.beta + cfg.delta > 0.0) || !(cfg.delta > 0.0))
    throw ConfigError("gap rates degenerate: delta and beta + delta must be positive");
  if (!(C >= 0.0) || !std::isfinite(C))
    throw ConfigError("embedding constant must be finite and nonnegative");
  const double a = cfg.alpha, b = cfg.beta, d = cfg.delta;
  const double t1 =
      std::exp(b + d) * (C * std::exp(-d) + 1.0) / (1.0 - std::exp(-(b + d)));
  const double t2 = (std::exp(-(a - d)) - 1.0) *
                    (C * std::exp(-d) + std::exp(a - d)) /
                    (1.0 - std::exp(a - d));
  return t1 + t2;
}

}  // namespace

std::pair<double, bool> gap_condition(const LPConfig& cfg, double C) {
  const double value = cfg.K * gap_bracket(cfg, C);
  return {value, value <= 0.5};
}

namespace {

// Grid layout shared by every entry point: the extended driver must cover
// [-K_max, 0] with grid-aligned unit intervals.
struct LPLayout {
  std::size_t steps_per_unit = 0;
  std::size_t n_pts = 0;  // points per unit window
  double dt = 0.0;
};

LPLayout check_layout(const SpectralOperator& op, const RoughPath& p_ext,
                      const LPConfig& cfg) {
  cfg.validate();
  op.require_manifold_gap();
  if (cfg.alpha > op.alpha_gap() + 1e-12 || cfg.beta > op.beta_gap() + 1e-12)
    throw ConfigError("configured rates exceed the operator's spectral gap");
  if (std::abs(cfg.gamma - p_ext.gamma) > 1e-12)
    throw InvalidConfig("config gamma must match the driver's");
  const double dt = p_ext.grid.dt();
  const double su_real = 1.0 / dt;
  const std::size_t su = static_cast<std::size_t>(std::llround(su_real));
  if (su < 1 || std::abs(double(su) * dt - 1.0) > 1e-9 * dt)
    throw GridMismatch("unit intervals are not grid-aligned");
  const double tiny = 1e-9 * dt;
  if (p_ext.grid.t0() > -double(cfg.K_max) + tiny || p_ext.grid.t1() < -tiny)
    throw OutOfRange("extended driver does not cover the backward history");
  LPLayout lay;
  lay.steps_per_unit = su;
  lay.n_pts = su + 1;
  lay.dt = dt;
  return lay;
}

RoughPath piece_window(const RoughPath& p_ext, int s) {
  return window(p_ext, -double(s + 1), -double(s));
}

void check_nonlinearities(const SpectralOperator& op, const Nonlinearity& f_R,
                          const Nonlinearity& g_R, const RoughPath& p_ext) {
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  if (f_R.n_modes() != N || g_R.n_modes() != N)
    throw InvalidInput("nonlinearity mode count does not match the operator");
  if (f_R.out_width() != 1)
    throw InvalidInput("drift must map into a single channel");
  if (g_R.out_width() != static_cast<std::size_t>(p_ext.d))
    throw InvalidInput("diffusion width must match the driver dimension");
}

void check_unstable_coordinate(const SpectralOperator& op,
                               const std::vector<double>& xi_u) {
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  if (xi_u.size() != N)
    throw InvalidInput("unstable coordinate has the wrong mode count");
  for (double v : xi_u)
    if (!std::isfinite(v))
      throw InvalidInput("unstable coordinate has non-finite entries");
  const std::size_t nu = static_cast<std::size_t>(op.n_unstable());
  for (std::size_t k = nu; k < N; ++k)
    if (std::abs(xi_u[k]) > 1e-14)
      throw InvalidInput("unstable coordinate carries stable-mode mass");
}

}  // namespace

LPSequence zero_sequence(const RoughPath& p_ext, std::size_t n_modes,
                         const LPConfig& cfg) {
  cfg.validate();
  LPSequence seq;
  seq.pieces.reserve(static_cast<std::size_t>(cfg.K_max));
  for (int s = 0; s < cfg.K_max; ++s) {
    const RoughPath q = piece_window(p_ext, s);
    seq.pieces.push_back(make_controlled_path(
        q.grid, n_modes, 1, static_cast<std::size_t>(p_ext.d), cfg.gamma,
        cfg.eta, -2.0 * cfg.gamma));
  }
  return seq;
}

double sequence_distance(const SpectralOperator& op, const LPSequence& a,
                         const LPSequence& b, const RoughPath& p_ext,
                         const LPConfig& cfg) {
  if (a.depth() != cfg.K_max || b.depth() != cfg.K_max)
    throw InvalidInput("sequence depth does not match the config");
  double dist = 0.0;
  for (int s = 0; s < cfg.K_max; ++s) {
    const ControlledPath& pa = a.pieces[s];
    const ControlledPath& pb = b.pieces[s];
    if (pa.grid != pb.grid)
      throw GridMismatch("sequences live on different grids");
    ControlledPath diff = pa;
    for (std::size_t i = 0; i < diff.y.size(); ++i) diff.y[i] -= pb.y[i];
    for (std::size_t i = 0; i < diff.yp.size(); ++i) diff.yp[i] -= pb.yp[i];
    const RoughPath q = piece_window(p_ext, s);
    const double weight = std::exp(cfg.delta * double(s + 1));
    dist = std::max(dist, weight * norms(diff, q, op).d_norm);
  }
  return dist;
}

LPSequence lp_apply(const SpectralOperator& op, const Nonlinearity& f_R,
                    const Nonlinearity& g_R, const LPSequence& seq,
                    const std::vector<double>& xi_u, const RoughPath& p_ext,
                    const LPConfig& cfg, LPApplyInfo* info) {
  const LPLayout lay = check_layout(op, p_ext, cfg);
  check_nonlinearities(op, f_R, g_R, p_ext);
  check_unstable_coordinate(op, xi_u);
  if (seq.depth() != cfg.K_max)
    throw InvalidInput("sequence depth does not match the config");

  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const std::size_t d = static_cast<std::size_t>(p_ext.d);
  const std::size_t n = lay.n_pts;
  const double h = lay.dt;
  const int K_max = cfg.K_max;

  // All pieces share the local grid, so one exponential table serves the
  // whole sweep: row j holds e^{lambda_k * j h}.
  const auto E = detail::lag_exp_table(op, n, h);
  const double* Eh = E.data() + N;

  // Per piece: the diffusion composition (also the output derivative), the
  // drift values, and the one-sweep integrals P(t_j) of the piece's own
  // trajectory, accumulated with the same exact-interval recursions as the
  // solver.
  std::vector<std::vector<double>> P(static_cast<std::size_t>(K_max));
  std::vector<ControlledPath> z(static_cast<std::size_t>(K_max));
  double k_measured = 0.0, seq_norm = 0.0;
  for (int s = 0; s < K_max; ++s) {
    const ControlledPath& piece = seq.pieces[s];
    const RoughPath q = piece_window(p_ext, s);
    if (piece.grid != q.grid)
      throw GridMismatch("sequence pieces do not match the driver windows");
    if (piece.width != 1 || piece.n_modes != N || piece.d != d)
      throw InvalidInput("sequence pieces have the wrong shape");

    z[s] = compose(g_R, piece, q, op);

    std::vector<double> fv(n * N);
    {
      double factor = 1.0;
      if (f_R.truncation()) factor = cutoff_factor(piece, *f_R.truncation(), q, op);
      std::vector<double> tmp(N);
      for (std::size_t j = 0; j < n; ++j) {
        const double* yj = piece.y_at(j, 0);
        if (factor != 1.0) {
          for (std::size_t k = 0; k < N; ++k) tmp[k] = factor * yj[k];
          f_R.eval(tmp.data(), fv.data() + j * N);
        } else {
          f_R.eval(yj, fv.data() + j * N);
        }
      }
    }

    std::vector<double>& Ps = P[s];
    Ps.assign(n * N, 0.0);
    std::vector<double> I(N, 0.0), D(N, 0.0), contrib(N);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      std::fill(contrib.begin(), contrib.end(), 0.0);
      const double* wj = q.w_at(j);
      const double* wj1 = q.w_at(j + 1);
      const double* w2 = q.w2_at(j, j + 1);
      for (std::size_t b = 0; b < d; ++b)
        kernels::axpy(wj1[b] - wj[b], z[s].y_at(j, b), contrib.data(), N);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          kernels::axpy(w2[a * d + b], z[s].yp_at(j, b, a), contrib.data(), N);
      const double* fj = fv.data() + j * N;
      const double* fj1 = fv.data() + (j + 1) * N;
      double* Pj1 = Ps.data() + (j + 1) * N;
      for (std::size_t k = 0; k < N; ++k) {
        I[k] = Eh[k] * (I[k] + contrib[k]);
        D[k] = Eh[k] * D[k] + 0.5 * h * (Eh[k] * fj[k] + fj1[k]);
        Pj1[k] = D[k] + I[k];
      }
    }

    if (info) {
      const double dn = norms(piece, q, op).d_norm;
      const double pn =
          std::sqrt(kernels::normsq(Ps.data() + (n - 1) * N, N));
      if (dn > 0.0) k_measured = std::max(k_measured, pn / dn);
      seq_norm = std::max(seq_norm, std::exp(cfg.delta * double(s + 1)) * dn);
    }
  }

  // Hard-zeroed unstable anchor (validated above to carry no stable mass).
  Coeffs xi0 = project(op, xi_u, Block::unstable);

  LPSequence out;
  out.pieces.reserve(static_cast<std::size_t>(K_max));
  for (int s = 0; s < K_max; ++s) {
    const int i = -s;
    const RoughPath q = piece_window(p_ext, s);
    ControlledPath piece = make_controlled_path(q.grid, N, 1, d, cfg.gamma,
                                                cfg.eta, -2.0 * cfg.gamma);

    // Everything except the piece's own running integral is an exponential
    // orbit in the local time: accumulate its value at t = 0.
    Coeffs w(N, 0.0);

    // Anchor, transported backward through the unstable block.
    {
      const Coeffs ga = group_apply_unstable(op, double(i - 1), xi0);
      for (std::size_t k = 0; k < N; ++k) w[k] += ga[k];
    }
    // Later unit-interval integrals, removed backward through the unstable
    // block; k runs over the intervals strictly after this piece.
    for (int k = i + 1; k <= 0; ++k) {
      const std::size_t sk = static_cast<std::size_t>(-k);
      const Coeffs pu = project(
          op, Coeffs(P[sk].data() + (n - 1) * N, P[sk].data() + n * N),
          Block::unstable);
      const Coeffs gb = group_apply_unstable(op, double(i - 1 - k), pu);
      for (std::size_t kk = 0; kk < N; ++kk) w[kk] -= gb[kk];
    }
    // The unstable part of the piece's own full-interval integral enters
    // backward from the right endpoint.
    {
      const Coeffs pu = project(
          op, Coeffs(P[s].data() + (n - 1) * N, P[s].data() + n * N),
          Block::unstable);
      const Coeffs gc = group_apply_unstable(op, -1.0, pu);
      for (std::size_t kk = 0; kk < N; ++kk) w[kk] -= gc[kk];
    }
    // Earlier unit-interval integrals flow forward through the stable block;
    // the sum truncates at the deepest piece the sequence holds.
    for (int k = i - 1; k >= -(K_max - 1); --k) {
      const std::size_t sk = static_cast<std::size_t>(-k);
      const Coeffs ps = project(
          op, Coeffs(P[sk].data() + (n - 1) * N, P[sk].data() + n * N),
          Block::stable);
      const Coeffs ss = semigroup_apply(op, double(i - 1 - k), ps);
      for (std::size_t kk = 0; kk < N; ++kk) w[kk] += ss[kk];
    }

    for (std::size_t j = 0; j < n; ++j) {
      const double* ej = E.data() + j * N;
      const double* Pj = P[s].data() + j * N;
      double* y = piece.y_at(j, 0);
      for (std::size_t k = 0; k < N; ++k) y[k] = ej[k] * w[k] + Pj[k];
      for (std::size_t a = 0; a < d; ++a)
        std::copy(z[s].y_at(j, a), z[s].y_at(j, a) + N, piece.yp_at(j, 0, a));
    }
    out.pieces.push_back(std::move(piece));
  }

  // Seam values agree up to the rounding of the exponential factorization;
  // make them exact by copying across.
  for (int s = 0; s + 1 < K_max; ++s) {
    const ControlledPath& deeper = out.pieces[static_cast<std::size_t>(s + 1)];
    std::copy(deeper.y_at(n - 1, 0), deeper.y_at(n - 1, 0) + N,
              out.pieces[static_cast<std::size_t>(s)].y_at(0, 0));
  }

  if (info) {
    info->k_measured = k_measured;
    info->seq_norm = seq_norm;
    const double bd = cfg.beta + cfg.delta;
    info->tail_bound = std::max(cfg.K, k_measured) * seq_norm *
                       std::exp(cfg.beta - cfg.delta) *
                       std::exp(-bd * double(K_max)) / (1.0 - std::exp(-bd));
  }
  return out;
}

LPFixedPoint lp_fixed_point(const SpectralOperator& op, const Nonlinearity& f_R,
                            const Nonlinearity& g_R,
                            const std::vector<double>& xi_u,
                            const RoughPath& p_ext, const LPConfig& cfg) {
  check_layout(op, p_ext, cfg);
  check_nonlinearities(op, f_R, g_R, p_ext);
  check_unstable_coordinate(op, xi_u);

  LPFixedPoint fp;
  {
    const auto [value, ok] = gap_condition(cfg, cfg.gap_C);
    fp.gap_value = value;
    fp.gap_ok = ok;
    if (cfg.enforce_gap && !ok) {
      std::ostringstream msg;
      msg << "gap condition value " << value << " exceeds 1/2";
      throw AssumptionError(msg.str());
    }
  }

  // Seed with the anchored backward orbit (one pass over the zero sequence).
  // A pure orbit has vanishing seminorms, so distances from the raw zero
  // sequence would make the first measured ratio meaningless.
  LPSequence cur = [&] {
    LPApplyInfo info;
    LPSequence z =
        zero_sequence(p_ext, static_cast<std::size_t>(op.n_modes()), cfg);
    LPSequence seed = lp_apply(op, f_R, g_R, z, xi_u, p_ext, cfg, &info);
    fp.tail_bound = std::max(fp.tail_bound, info.tail_bound);
    return seed;
  }();
  std::vector<double> trace;
  double prev = -1.0;
  for (int it = 1; it <= cfg.max_lp_iters; ++it) {
    LPApplyInfo info;
    LPSequence next = lp_apply(op, f_R, g_R, cur, xi_u, p_ext, cfg, &info);
    const double dist = sequence_distance(op, next, cur, p_ext, cfg);
    if (!std::isfinite(dist))
      throw AssumptionError("sequence update left the finite range");
    trace.push_back(dist);
    if (prev > 0.0) {
      const double rate = dist / prev;
      fp.rates.push_back(rate);
      if (dist > cfg.lp_tol && rate >= 0.9) {
        std::ostringstream msg;
        msg << "transform is not contracting: rate " << rate << " at iteration "
            << it;
        throw AssumptionError(msg.str());
      }
    }
    cur = std::move(next);
    fp.tail_bound = std::max(fp.tail_bound, info.tail_bound);
    if (dist <= cfg.lp_tol) {
      fp.seq = std::move(cur);
      fp.iterations = it;
      fp.final_distance = dist;
      return fp;
    }
    prev = dist;
  }
  throw ConvergenceError("fixed-point iteration exhausted max_lp_iters",
                         std::move(trace));
}

GraphExtraction extract_graph(const SpectralOperator& op,
                              const Nonlinearity& f_R, const Nonlinearity& g_R,
                              const LPFixedPoint& fixed,
                              const std::vector<double>& xi_u,
                              const RoughPath& p_ext, const LPConfig& cfg) {
  if (fixed.seq.depth() != cfg.K_max)
    throw InvalidInput("fixed point depth does not match the config");
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const ControlledPath& top = fixed.seq.pieces[0];
  const std::size_t last = top.grid.n_points() - 1;

  GraphExtraction ge;
  ge.h_direct =
      project(op, Coeffs(top.y_at(last, 0), top.y_at(last, 0) + N), Block::stable);

  // Series route: one more pass through the transform; at the fixed point the
  // propagated-integral series reproduces the stored value.
  const LPSequence re = lp_apply(op, f_R, g_R, fixed.seq, xi_u, p_ext, cfg);
  const ControlledPath& rtop = re.pieces[0];
  ge.h_series = project(
      op, Coeffs(rtop.y_at(last, 0), rtop.y_at(last, 0) + N), Block::stable);

  ge.mismatch = std::sqrt(
      kernels::diff_normsq(ge.h_direct.data(), ge.h_series.data(), N));
  return ge;
}

namespace {

std::vector<std::vector<double>> unstable_mesh(const SpectralOperator& op,
                                               double radius, int n_samples) {
  const int nu = op.n_unstable();
  std::vector<double> axis;
  if (n_samples == 1) {
    axis.push_back(0.0);
  } else {
    for (int j = 0; j < n_samples; ++j)
      axis.push_back(-radius + 2.0 * radius * double(j) / double(n_samples - 1));
  }
  std::vector<std::vector<double>> mesh;
  if (nu == 1) {
    for (double v : axis) mesh.push_back({v});
  } else {
    for (double v1 : axis)
      for (double v2 : axis) mesh.push_back({v1, v2});
  }
  return mesh;
}

}  // namespace

ManifoldGraph build_manifold(const SpectralOperator& op, const Nonlinearity& f,
                             const Nonlinearity& g, const RoughPath& p_ext,
                             const LPConfig& cfg, double ball_radius,
                             int n_samples) {
  check_layout(op, p_ext, cfg);
  check_nonlinearities(op, f, g, p_ext);
  if (!(ball_radius > 0.0) || !std::isfinite(ball_radius))
    throw InvalidConfig("ball radius must be positive");
  if (n_samples < 1) throw InvalidConfig("need at least one mesh sample");
  const int nu = op.n_unstable();
  if (nu < 1 || nu > 2)
    throw InvalidConfig("the mesh supports one or two unstable modes");

  // The origin must be an equilibrium whose linearization is carried entirely
  // by the operator. A diagonal linear drift is admitted as a degenerate
  // case: it commutes with the spectral split, so it only shifts rates.
  if (f.kind() != NonlinKind::linear) f.require_drift_stationary();
  g.require_diffusion_stationary();

  const RoughPath history = window(p_ext, -double(cfg.K_max), 0.0);
  const CutoffConfig cc = [&] {
    const double cf = f.lip();
    if (g.kind() == NonlinKind::zero)
      return solve_cutoff_radius(history, cfg.K, cf, [](double) { return 0.0; });
    const double gl = g.lip();
    return solve_cutoff_radius(history, cfg.K, cf,
                               [gl](double r) { return gl * std::min(1.0, r); });
  }();

  const Nonlinearity f_R =
      (f.kind() == NonlinKind::collocation) ? truncated_nonlinearity(f, cc) : f;
  const Nonlinearity g_R =
      (g.kind() == NonlinKind::collocation) ? truncated_nonlinearity(g, cc) : g;

  ManifoldGraph graph;
  graph.cutoff = cc;
  graph.cfg = cfg;
  graph.radius = std::min(ball_radius, cc.R / 4.0);
  {
    const auto [value, ok] = gap_condition(cfg, cfg.gap_C);
    graph.gap_value = value;
    graph.gap_ok = ok;
    graph.k_admissible = 0.5 / gap_bracket(cfg, cfg.gap_C);
  }

  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  for (const std::vector<double>& pt : unstable_mesh(op, graph.radius, n_samples)) {
    GraphSample sample;
    sample.xi_u.assign(N, 0.0);
    for (std::size_t k = 0; k < pt.size(); ++k) sample.xi_u[k] = pt[k];
    sample.h_u.assign(N, 0.0);
    try {
      const LPFixedPoint fp =
          lp_fixed_point(op, f_R, g_R, sample.xi_u, p_ext, cfg);
      const GraphExtraction ge =
          extract_graph(op, f_R, g_R, fp, sample.xi_u, p_ext, cfg);
      sample.h_u = ge.h_direct;
      sample.converged = true;
      sample.iterations = fp.iterations;
      graph.tail_bound = std::max(graph.tail_bound, fp.tail_bound);
    } catch (const ConvergenceError& e) {
      sample.note = e.what();
    } catch (const AssumptionError& e) {
      sample.note = e.what();
    }
    graph.samples.push_back(std::move(sample));
  }

  double lip = 0.0;
  for (std::size_t a = 0; a < graph.samples.size(); ++a) {
    if (!graph.samples[a].converged) continue;
    for (std::size_t b = a + 1; b < graph.samples.size(); ++b) {
      if (!graph.samples[b].converged) continue;
      const double dx = std::sqrt(kernels::diff_normsq(
          graph.samples[a].xi_u.data(), graph.samples[b].xi_u.data(), N));
      if (dx <= 0.0) continue;
      const double dh = std::sqrt(kernels::diff_normsq(
          graph.samples[a].h_u.data(), graph.samples[b].h_u.data(), N));
      lip = std::max(lip, dh / dx);
    }
  }
  graph.lipschitz_estimate = lip;
  return graph;
}

InvarianceCheck invariance_defect(const ManifoldGraph& graph,
                                  const SpectralOperator& op,
                                  const Nonlinearity& f, const Nonlinearity& g,
                                  const RoughPath& p_ext,
                                  const std::vector<double>& xi_u,
                                  const SolveConfig& solve_cfg,
                                  double t_forward) {
  const LPConfig& cfg = graph.cfg;
  check_layout(op, p_ext, cfg);
  check_unstable_coordinate(op, xi_u);
  if (!(t_forward > 0.0) ||
      t_forward > p_ext.grid.t1() + 1e-9 * p_ext.grid.dt())
    throw OutOfRange("forward time must lie inside the extended driver");

  const Nonlinearity f_R = (f.kind() == NonlinKind::collocation)
                               ? truncated_nonlinearity(f, graph.cutoff)
                               : f;
  const Nonlinearity g_R = (g.kind() == NonlinKind::collocation)
                               ? truncated_nonlinearity(g, graph.cutoff)
                               : g;

  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const LPFixedPoint fp1 = lp_fixed_point(op, f_R, g_R, xi_u, p_ext, cfg);
  const ControlledPath& top = fp1.seq.pieces[0];
  const std::size_t last = top.grid.n_points() - 1;
  const Coeffs h1 = project(
      op, Coeffs(top.y_at(last, 0), top.y_at(last, 0) + N), Block::stable);

  Coeffs z0(N);
  for (std::size_t k = 0; k < N; ++k) z0[k] = xi_u[k] + h1[k];

  const RoughPath fw = window(p_ext, 0.0, t_forward);
  const SolutionTrajectory traj =
      solve_global(op, f, g, z0, fw, t_forward, solve_cfg);
  const Coeffs z_t = traj.value_at(t_forward);

  const RoughPath shifted = shift(p_ext, t_forward);
  const Coeffs xi2 = project(op, z_t, Block::unstable);
  const LPFixedPoint fp2 = lp_fixed_point(op, f_R, g_R, xi2, shifted, cfg);
  const ControlledPath& top2 = fp2.seq.pieces[0];
  const Coeffs h2 = project(
      op, Coeffs(top2.y_at(last, 0), top2.y_at(last, 0) + N), Block::stable);

  const Coeffs zs = project(op, z_t, Block::stable);
  InvarianceCheck chk;
  chk.defect = std::sqrt(kernels::diff_normsq(zs.data(), h2.data(), N));
  chk.z_forward = z_t;
  chk.h_shifted = h2;
  const double xi2n = std::sqrt(kernels::normsq(xi2.data(), N));
  chk.out_of_ball = xi2n > graph.radius + 1e-12 ||
                    interp_norm(op, z_t, 0.0) > graph.cutoff.R / 2.0;
  return chk;
}

}  // namespace roughflow
