#include "roughflow/rough_integral.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <utility>

#include "roughflow/errors.hpp"
#include "roughflow/kernels.hpp"
#include "semigroup_table.hpp"

namespace roughflow {

namespace {

using Interval = std::pair<std::size_t, std::size_t>;

void check_integrand(const ControlledPath& z, const RoughPath& p,
                     const SpectralOperator& op) {
  if (!(z.grid == p.grid)) throw GridMismatch("integrand and driver grids differ");
  if (z.d != static_cast<std::size_t>(p.d))
    throw InvalidInput("integrand and driver dimensions differ");
  if (z.width != static_cast<std::size_t>(p.d))
    throw InvalidInput("integrand width must equal the driver dimension");
  if (z.n_modes != static_cast<std::size_t>(op.n_modes()))
    throw InvalidInput("integrand and operator mode counts differ");
}

// Compensated sum over one partition; E holds e^(lambda_k * lag * h) rows
// relative to the right endpoint j1.
void partition_sum(const ControlledPath& z, const RoughPath& p,
                   const std::vector<double>& E, std::size_t j1,
                   const std::vector<Interval>& part, Coeffs& acc) {
  const std::size_t N = z.n_modes, d = z.d;
  std::fill(acc.begin(), acc.end(), 0.0);
  std::vector<double> contrib(N);
  for (const auto& [i0, i1] : part) {
    std::fill(contrib.begin(), contrib.end(), 0.0);
    const double* w0 = p.w_at(i0);
    const double* w1 = p.w_at(i1);
    for (std::size_t b = 0; b < d; ++b)
      kernels::axpy(w1[b] - w0[b], z.y_at(i0, b), contrib.data(), N);
    const double* w2 = p.w2_at(i0, i1);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        kernels::axpy(w2[a * d + b], z.yp_at(i0, b, a), contrib.data(), N);
    const double* erow = E.data() + (j1 - i0) * N;
    for (std::size_t k = 0; k < N; ++k) acc[k] += erow[k] * contrib[k];
  }
}

std::vector<Interval> refine(const std::vector<Interval>& part) {
  std::vector<Interval> out;
  out.reserve(2 * part.size());
  for (const auto& [i0, i1] : part) {
    if (i1 - i0 >= 2) {
      const std::size_t mid = i0 + (i1 - i0) / 2;
      out.emplace_back(i0, mid);
      out.emplace_back(mid, i1);
    } else {
      out.emplace_back(i0, i1);
    }
  }
  return out;
}

}  // namespace

IntegralResult rough_convolution(const SpectralOperator& op,
                                 const ControlledPath& integrand, const RoughPath& p,
                                 double s, double t, double tol, int max_level) {
  check_integrand(integrand, p, op);
  if (!(tol >= 0.0)) throw InvalidInput("integrator tolerance must be nonnegative");
  if (max_level < 1) throw InvalidInput("integrator needs at least one level");
  const std::size_t j0 = p.grid.index_of(s);
  const std::size_t j1 = p.grid.index_of(t);
  if (j1 < j0) throw InvalidInput("integration interval is reversed");

  const std::size_t N = integrand.n_modes;
  IntegralResult res;
  res.value.assign(N, 0.0);
  res.local_error_model = std::numeric_limits<double>::quiet_NaN();
  if (j0 == j1) return res;

  const std::vector<double> E =
      detail::lag_exp_table(op, j1 - j0 + 1, p.grid.dt());
  std::vector<Interval> part = {{j0, j1}};
  Coeffs prev(N), cur(N);
  partition_sum(integrand, p, E, j1, part, prev);

  std::vector<double> trace;
  for (int level = 1; level <= max_level; ++level) {
    bool splittable = false;
    for (const auto& iv : part)
      if (iv.second - iv.first >= 2) {
        splittable = true;
        break;
      }
    if (!splittable) {
      // the sum is the full discrete integral; another level would repeat it
      res.value = prev;
      res.partition_level = level - 1;
      res.cauchy_residual = 0.0;
      return res;
    }
    part = refine(part);
    partition_sum(integrand, p, E, j1, part, cur);
    const double residual =
        std::sqrt(kernels::diff_normsq(cur.data(), prev.data(), N));
    trace.push_back(residual);
    if (residual <= tol / 8.0) {
      res.value = cur;
      res.partition_level = level;
      res.cauchy_residual = residual;
      return res;
    }
    prev = cur;
  }
  throw ConvergenceError("compensated sums did not settle within the level budget",
                         std::move(trace));
}

double local_error_probe(const SpectralOperator& op, const ControlledPath& integrand,
                         const RoughPath& p, double beta_target) {
  check_integrand(integrand, p, op);
  const std::size_t n = p.grid.n_points(), N = integrand.n_modes, d = integrand.d;
  const std::size_t steps = n - 1;
  if (steps < 4) throw InvalidInput("order probe needs at least 4 grid steps");

  const std::vector<double> wt = interp_weights(op, integrand.alpha + beta_target);
  const std::vector<double> E = detail::lag_exp_table(op, n, p.grid.dt());

  std::vector<double> log_span, log_res;
  Coeffs approx(N), diff(N);
  for (std::size_t span = steps / 2; span >= 2; span /= 2) {
    double worst = 0.0;
    // spread up to 9 anchor windows across the whole grid
    const std::size_t stride = std::max<std::size_t>(1, (steps - span) / 8);
    std::size_t anchors = 0;
    for (std::size_t i0 = 0; i0 + span < n && anchors < 9; i0 += stride, ++anchors) {
      const std::size_t i1 = i0 + span;
      const IntegralResult fine = rough_convolution(
          op, integrand, p, p.grid.point(i0), p.grid.point(i1), 0.0);
      // one-step compensated approximation S_{ts}(z_s dw + z'_s w2)
      std::fill(approx.begin(), approx.end(), 0.0);
      const double* w0 = p.w_at(i0);
      const double* w1 = p.w_at(i1);
      for (std::size_t b = 0; b < d; ++b)
        kernels::axpy(w1[b] - w0[b], integrand.y_at(i0, b), approx.data(), N);
      const double* w2 = p.w2_at(i0, i1);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b)
          kernels::axpy(w2[a * d + b], integrand.yp_at(i0, b, a), approx.data(), N);
      const double* erow = E.data() + span * N;
      for (std::size_t k = 0; k < N; ++k)
        diff[k] = fine.value[k] - erow[k] * approx[k];
      worst = std::max(
          worst, std::sqrt(kernels::weighted_normsq(diff.data(), wt.data(), N)));
    }
    if (worst > 0.0) {
      log_span.push_back(std::log(double(span) * p.grid.dt()));
      log_res.push_back(std::log(worst));
    }
  }

  if (log_span.size() < 2) return std::numeric_limits<double>::infinity();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = double(log_span.size());
  for (std::size_t i = 0; i < log_span.size(); ++i) {
    sx += log_span[i];
    sy += log_res[i];
    sxx += log_span[i] * log_span[i];
    sxy += log_span[i] * log_res[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

Coeffs duhamel_drift(const SpectralOperator& op, const TimeGrid& grid,
                     const std::vector<double>& f_values, double s, double t) {
  const std::size_t N = static_cast<std::size_t>(op.n_modes());
  const std::size_t n = grid.n_points();
  if (f_values.size() != n * N)
    throw InvalidInput("drift table size does not match grid points times modes");
  const std::size_t j0 = grid.index_of(s);
  const std::size_t j1 = grid.index_of(t);
  if (j1 < j0) throw InvalidInput("integration interval is reversed");

  Coeffs acc(N, 0.0);
  if (j0 == j1) return acc;
  const std::vector<double> E = detail::lag_exp_table(op, j1 - j0 + 1, grid.dt());
  const double half_h = 0.5 * grid.dt();
  for (std::size_t i = j0; i < j1; ++i) {
    const double* fl = f_values.data() + i * N;
    const double* fr = f_values.data() + (i + 1) * N;
    const double* el = E.data() + (j1 - i) * N;
    const double* er = E.data() + (j1 - i - 1) * N;
    for (std::size_t k = 0; k < N; ++k)
      acc[k] += half_h * (el[k] * fl[k] + er[k] * fr[k]);
  }
  return acc;
}

}  // namespace roughflow
