#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "io_util.hpp"
#include "roughflow/cli.hpp"
#include "roughflow/errors.hpp"
#include "roughflow/manifold.hpp"
#include "roughflow/ree_solver.hpp"
#include "roughflow/rough_path.hpp"

namespace roughflow {

using nlohmann::json;

namespace {

void require_section(bool present, const char* command, const char* section) {
  if (!present)
    throw ConfigError(std::string(command) + " needs a [" + section +
                      "] section");
}

Nonlinearity nonlin_or_zero(const std::optional<NonlinParams>& np,
                            std::size_t n_modes, std::size_t out_width) {
  if (!np) return Nonlinearity::zero(n_modes, out_width);
  return build_nonlinearity(*np, n_modes, out_width);
}

void emit(const RunConfig& rc, Report& rep, const std::string& name,
          const std::string& content) {
  io::write_file(join_path(rc.out_dir, name), content);
  rep.artifacts.push_back(name);
}

}  // namespace

Report cmd_driver(const RunConfig& rc) {
  require_section(rc.driver.has_value(), "driver", "driver");
  Report rep;
  rep.command = "driver";

  const RoughPath p = build_driver(*rc.driver, rc.seed);
  const double defect = chen_defect(p);
  const PathHolderNorms hn = holder_norms(p);

  ensure_out_dir(rc);
  if (rc.format == "csv") {
    save_rough_path_csv(p, join_path(rc.out_dir, "driver_level1.csv"),
                        join_path(rc.out_dir, "driver_level2.csv"));
    rep.artifacts.push_back("driver_level1.csv");
    rep.artifacts.push_back("driver_level2.csv");
  } else {
    save_rough_path_json(p, join_path(rc.out_dir, "driver.json"));
    rep.artifacts.push_back("driver.json");
  }

  json diag;
  diag["kind"] = rc.driver->kind;
  diag["d"] = p.d;
  diag["gamma"] = p.gamma;
  diag["grid"] = {{"t0", p.grid.t0()}, {"t1", p.grid.t1()},
                  {"n_points", p.n()}};
  diag["chen_defect"] = defect;
  diag["holder"] = {{"w_gamma", hn.w_gamma}, {"w2_2gamma", hn.w2_2gamma}};
  emit(rc, rep, "driver_diagnostics.json", diag.dump(2) + "\n");

  rep.criteria.push_back(check_upper("chen-defect", defect, 1e-10));
  rep.add_metric("holder_w_gamma", hn.w_gamma);
  rep.add_metric("holder_w2_2gamma", hn.w2_2gamma);

  write_manifest(rc, rep);
  return rep;
}

Report cmd_solve(const RunConfig& rc) {
  require_section(rc.driver.has_value(), "solve", "driver");
  require_section(rc.op.has_value(), "solve", "operator");
  Report rep;
  rep.command = "solve";

  const RoughPath p = build_driver(*rc.driver, rc.seed);
  const SpectralOperator op = build_operator(*rc.op);
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const Nonlinearity f = nonlin_or_zero(rc.drift, N, 1);
  const Nonlinearity g =
      nonlin_or_zero(rc.diffusion, N, static_cast<std::size_t>(p.d));

  SolverParams sp = rc.solver.value_or(SolverParams{});
  sp.cfg.gamma = p.gamma;
  sp.cfg.validate();
  if (sp.xi.size() > N)
    throw ConfigError("[solver] xi: more entries than operator modes");
  Coeffs xi(N, 0.0);
  std::copy(sp.xi.begin(), sp.xi.end(), xi.begin());

  const SolutionTrajectory traj = solve_global(op, f, g, xi, p, sp.cfg.T, sp.cfg);

  ensure_out_dir(rc);
  if (rc.format == "csv") {
    std::ostringstream csv;
    csv << "t";
    for (std::size_t k = 1; k <= N; ++k) csv << ",y_" << k;
    csv << "\n";
    for (std::size_t s = 0; s < traj.segments.size(); ++s) {
      const ControlledPath& seg = traj.segments[s];
      for (std::size_t j = (s == 0 ? 0 : 1); j < seg.grid.n_points(); ++j) {
        csv << io::format_double(seg.grid.point(j));
        const double* row = seg.y_at(j, 0);
        for (std::size_t k = 0; k < N; ++k)
          csv << "," << io::format_double(row[k]);
        csv << "\n";
      }
    }
    emit(rc, rep, "trajectory.csv", csv.str());
  } else {
    json doc;
    doc["format"] = "trajectory/1";
    doc["n_modes"] = N;
    json times = json::array(), values = json::array();
    for (std::size_t s = 0; s < traj.segments.size(); ++s) {
      const ControlledPath& seg = traj.segments[s];
      for (std::size_t j = (s == 0 ? 0 : 1); j < seg.grid.n_points(); ++j) {
        times.push_back(seg.grid.point(j));
        json row = json::array();
        const double* y = seg.y_at(j, 0);
        for (std::size_t k = 0; k < N; ++k) row.push_back(y[k]);
        values.push_back(std::move(row));
      }
    }
    doc["times"] = std::move(times);
    doc["values"] = std::move(values);
    emit(rc, rep, "trajectory.json", doc.dump(2) + "\n");
  }

  double max_residual = 0.0;
  json segs = json::array();
  for (const SegmentDiagnostics& d : traj.diagnostics) {
    max_residual = std::max(max_residual, d.residual);
    segs.push_back({{"t_start", d.t_start},
                    {"T0", d.T0},
                    {"iterations", d.iterations},
                    {"contraction", d.contraction},
                    {"residual", d.residual}});
  }
  json diag;
  diag["segments"] = std::move(segs);
  diag["n_segments"] = traj.segments.size();
  diag["end_time"] = traj.end_time();
  diag["growth"] = {{"m_fit", traj.m_fit},
                    {"r_tilde", traj.r_tilde},
                    {"apriori_margin", traj.apriori_margin}};
  emit(rc, rep, "solve_diagnostics.json", diag.dump(2) + "\n");

  rep.criteria.push_back(
      check_upper("picard-residual", max_residual, sp.cfg.picard_tol));
  rep.criteria.push_back(
      check_upper("growth-margin", traj.apriori_margin, 1.2));
  rep.add_metric("n_segments", static_cast<double>(traj.segments.size()));
  rep.add_metric("end_time", traj.end_time());
  rep.add_metric("m_fit", traj.m_fit);

  write_manifest(rc, rep);
  return rep;
}

Report cmd_manifold(const RunConfig& rc) {
  require_section(rc.driver.has_value(), "manifold", "driver");
  require_section(rc.op.has_value(), "manifold", "operator");
  require_section(rc.manifold.has_value(), "manifold", "manifold");
  Report rep;
  rep.command = "manifold";

  ManifoldParams mp = *rc.manifold;

  // The graph machinery fixes the time window: K_max unit history intervals
  // plus one forward interval, sampled per_unit points per unit. [driver]
  // t0/t1/n_points apply to the plain driver/solve commands only.
  DriverParams dp = *rc.driver;
  dp.t0 = -static_cast<double>(mp.cfg.K_max);
  dp.t1 = 1.0;
  dp.n_points = (mp.cfg.K_max + 1) * (mp.per_unit - 1) + 1;
  const RoughPath p = build_driver(dp, rc.seed);

  const SpectralOperator op = build_operator(*rc.op);
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const Nonlinearity f = nonlin_or_zero(rc.drift, N, 1);
  const Nonlinearity g =
      nonlin_or_zero(rc.diffusion, N, static_cast<std::size_t>(p.d));
  mp.cfg.gamma = p.gamma;
  mp.cfg.validate();

  ManifoldGraph graph =
      build_manifold(op, f, g, p, mp.cfg, mp.ball_radius, mp.n_samples);
  std::stable_sort(graph.samples.begin(), graph.samples.end(),
                   [](const GraphSample& a, const GraphSample& b) {
                     return a.xi_u < b.xi_u;
                   });

  const std::size_t nu = graph.samples.empty() ? 0 : graph.samples[0].xi_u.size();
  const std::size_t nh = graph.samples.empty() ? 0 : graph.samples[0].h_u.size();

  ensure_out_dir(rc);
  if (rc.format == "csv") {
    std::ostringstream csv;
    for (std::size_t k = 1; k <= nu; ++k) csv << (k == 1 ? "" : ",") << "xi_" << k;
    for (std::size_t k = 1; k <= nh; ++k) csv << ",h_" << k;
    csv << ",converged,iterations\n";
    for (const GraphSample& s : graph.samples) {
      for (std::size_t k = 0; k < nu; ++k)
        csv << (k == 0 ? "" : ",") << io::format_double(s.xi_u[k]);
      for (std::size_t k = 0; k < nh; ++k)
        csv << "," << io::format_double(s.h_u[k]);
      csv << "," << (s.converged ? 1 : 0) << "," << s.iterations << "\n";
    }
    emit(rc, rep, "graph.csv", csv.str());
  } else {
    json rows = json::array();
    for (const GraphSample& s : graph.samples)
      rows.push_back({{"xi_u", s.xi_u},
                      {"h_u", s.h_u},
                      {"converged", s.converged},
                      {"iterations", s.iterations}});
    json doc;
    doc["format"] = "manifold-graph/1";
    doc["samples"] = std::move(rows);
    emit(rc, rep, "graph.json", doc.dump(2) + "\n");
  }

  int failed = 0;
  json failed_notes = json::array();
  const GraphSample* origin = nullptr;
  for (const GraphSample& s : graph.samples) {
    if (!s.converged) {
      ++failed;
      failed_notes.push_back({{"xi_u", s.xi_u}, {"note", s.note}});
    }
    const bool at_origin =
        std::all_of(s.xi_u.begin(), s.xi_u.end(),
                    [](double v) { return v == 0.0; });
    if (at_origin) origin = &s;
  }

  json doc;
  doc["gap"] = {{"value", graph.gap_value},
                {"ok", graph.gap_ok},
                {"k_admissible", graph.k_admissible}};
  doc["radius"] = graph.radius;
  doc["lipschitz_estimate"] = graph.lipschitz_estimate;
  doc["tail_bound"] = graph.tail_bound;
  doc["cutoff"] = {{"K", graph.cutoff.K}, {"R", graph.cutoff.R}};
  doc["lp"] = {{"alpha", graph.cfg.alpha},     {"beta", graph.cfg.beta},
               {"delta", graph.cfg.delta},     {"gamma", graph.cfg.gamma},
               {"eta", graph.cfg.eta},         {"K", graph.cfg.K},
               {"gap_C", graph.cfg.gap_C},     {"K_max", graph.cfg.K_max},
               {"lp_tol", graph.cfg.lp_tol},
               {"max_lp_iters", graph.cfg.max_lp_iters},
               {"enforce_gap", graph.cfg.enforce_gap}};
  doc["samples"] = {{"total", graph.samples.size()},
                    {"converged", graph.samples.size() - failed},
                    {"failed", std::move(failed_notes)}};

  rep.criteria.push_back(
      check_upper("samples-converged", static_cast<double>(failed), 0.0,
                  "count of mesh points whose fixed point failed"));
  if (origin) {
    double h0 = 0.0;
    for (double v : origin->h_u) h0 = std::max(h0, std::abs(v));
    rep.criteria.push_back(
        check_upper("origin-fixed", h0, 0.0, "graph value over xi = 0"));
  }
  if (mp.cfg.enforce_gap)
    rep.criteria.push_back(check_upper("gap-value", graph.gap_value, 0.5));
  else
    rep.add_metric("gap_value", graph.gap_value);

  if (!mp.invariance_xi.empty()) {
    const std::size_t n_unstable = static_cast<std::size_t>(op.n_unstable());
    if (mp.invariance_xi.size() != n_unstable)
      throw ConfigError("[manifold] invariance_xi: expected " +
                        std::to_string(n_unstable) + " unstable coordinates");
    std::vector<double> xi(N, 0.0);
    std::copy(mp.invariance_xi.begin(), mp.invariance_xi.end(), xi.begin());

    SolverParams sp = rc.solver.value_or(SolverParams{});
    sp.cfg.gamma = p.gamma;
    sp.cfg.validate();
    const InvarianceCheck chk =
        invariance_defect(graph, op, f, g, p, xi, sp.cfg, mp.t_forward);
    const double budget = 50.0 * (mp.cfg.lp_tol + sp.cfg.picard_tol);
    doc["invariance"] = {{"xi_u", mp.invariance_xi},
                         {"defect", chk.defect},
                         {"out_of_ball", chk.out_of_ball},
                         {"budget", budget}};
    rep.criteria.push_back(
        check_upper("invariance-defect", chk.defect, budget));
  }

  emit(rc, rep, "manifold_report.json", doc.dump(2) + "\n");
  rep.add_metric("lipschitz_estimate", graph.lipschitz_estimate);
  rep.add_metric("cutoff_R", graph.cutoff.R);
  rep.add_metric("tail_bound", graph.tail_bound);
  rep.add_metric("k_admissible", graph.k_admissible);

  write_manifest(rc, rep);
  return rep;
}

}  // namespace roughflow
