#include "roughflow/rough_path.hpp"

#include <cmath>
#include <random>
#include <string>

#include "roughflow/errors.hpp"
#include "roughflow/kernels.hpp"
#include "roughflow/rng.hpp"

namespace roughflow {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 1.0 / 3.0 && gamma <= 0.5))
    throw InvalidConfig("RoughPath: gamma must lie in (1/3, 1/2], got " +
                        std::to_string(gamma));
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw InvalidInput(std::string(what) + ": non-finite value");
}

// Power table (m*h)^(-expo) for span m = 1..n-1; keeps pow() out of the pair
// scans.
std::vector<double> inv_power_table(const TimeGrid& g, double expo) {
  const std::size_t n = g.n_points();
  std::vector<double> t(n, 0.0);
  const double h = g.dt();
  for (std::size_t m = 1; m < n; ++m)
    t[m] = std::pow(static_cast<double>(m) * h, -expo);
  return t;
}

}  // namespace

std::size_t RoughPath::pair_index(std::size_t i, std::size_t j) const {
  const std::size_t np = grid.n_points();
  if (j >= np || i > j)
    throw OutOfRange("RoughPath: bad pair (" + std::to_string(i) + ", " +
                     std::to_string(j) + ")");
  // Row i starts after rows 0..i-1, which hold (n) + (n-1) + ... + (n-i+1)
  // entries.
  return i * np - (i * (i - 1)) / 2 + (j - i);
}

RoughPath make_rough_path(const TimeGrid& grid, int d, double gamma,
                          std::vector<double> w, std::vector<double> w2,
                          bool validate) {
  check_gamma(gamma);
  if (d < 1) throw InvalidInput("RoughPath: dimension must be >= 1");
  const std::size_t n = grid.n_points();
  const std::size_t npairs = n * (n + 1) / 2;
  if (w.size() != n * static_cast<std::size_t>(d))
    throw InvalidInput("RoughPath: first-level size mismatch");
  if (w2.size() != npairs * static_cast<std::size_t>(d * d))
    throw InvalidInput("RoughPath: second-level size mismatch");
  RoughPath p;
  p.grid = grid;
  p.d = d;
  p.gamma = gamma;
  p.w = std::move(w);
  p.w2 = std::move(w2);
  if (validate) {
    check_finite(p.w, "RoughPath w");
    check_finite(p.w2, "RoughPath w2");
    const double defect = chen_defect(p, /*sample_seed=*/0, /*max_samples=*/100'000);
    if (defect > 1e-10)
      throw InvalidInput("RoughPath: Chen defect " + std::to_string(defect) +
                         " exceeds 1e-10");
  }
  return p;
}

RoughPath build_smooth_lift(const TimeGrid& internal_grid,
                            const std::vector<double>& samples, int d,
                            const TimeGrid& target, double gamma) {
  check_gamma(gamma);
  if (d < 1) throw InvalidInput("build_smooth_lift: dimension must be >= 1");
  const std::size_t m = internal_grid.n_points();
  if (samples.size() != m * static_cast<std::size_t>(d))
    throw InvalidInput("build_smooth_lift: sample count does not match internal grid");
  check_finite(samples, "build_smooth_lift samples");
  // The internal grid must refine the target in place: shared endpoints and an
  // integer interval ratio.
  if (internal_grid.n_intervals() % target.n_intervals() != 0 ||
      std::abs(internal_grid.t0() - target.t0()) > 1e-12 * std::max(1.0, std::abs(target.t0())) ||
      std::abs(internal_grid.t1() - target.t1()) > 1e-12 * std::max(1.0, std::abs(target.t1())))
    throw GridMismatch("build_smooth_lift: internal grid does not refine target");
  const std::size_t r = internal_grid.n_intervals() / target.n_intervals();

  const std::size_t n = target.n_points();
  const std::size_t dd = static_cast<std::size_t>(d) * d;
  RoughPath p;
  p.grid = target;
  p.d = d;
  p.gamma = gamma;
  p.w.resize(n * d);
  p.w2.assign((n * (n + 1) / 2) * dd, 0.0);

  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) p.w[i * d + a] = samples[(i * r) * d + a];

  // Adjacent-pair blocks by trapezoid over the internal sub-grid; exact for
  // the piecewise-linear interpolant.
  std::vector<double> adj(std::max<std::size_t>(1, n - 1) * dd, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double* blk = adj.data() + i * dd;
    const double* ws = samples.data() + (i * r) * d;
    for (std::size_t k = 0; k < r; ++k) {
      const double* u0 = samples.data() + (i * r + k) * d;
      const double* u1 = samples.data() + (i * r + k + 1) * d;
      for (int a = 0; a < d; ++a) {
        const double fa = 0.5 * (u0[a] + u1[a]) - ws[a];
        for (int b = 0; b < d; ++b) blk[a * d + b] += fa * (u1[b] - u0[b]);
      }
    }
  }

  // Longer spans by the Chen recursion w2(i,j) = w2(i,j-1) + adj(j-1)
  // + dw(i,j-1) (x) dw(j-1,j); Chen then holds for every triple by
  // telescoping, up to rounding.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double* first = p.w2_at(i, i + 1);
    for (std::size_t e = 0; e < dd; ++e) first[e] = adj[i * dd + e];
    for (std::size_t j = i + 2; j < n; ++j) {
      const double* prev = p.w2_at(i, j - 1);
      const double* step = adj.data() + (j - 1) * dd;
      double* cur = p.w2_at(i, j);
      const double* wi = p.w_at(i);
      const double* wl = p.w_at(j - 1);
      const double* wj = p.w_at(j);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          cur[a * d + b] = prev[a * d + b] + step[a * d + b] +
                           (wl[a] - wi[a]) * (wj[b] - wl[b]);
    }
  }
  return p;
}

RoughPath build_bm_lift(std::uint64_t seed, const TimeGrid& grid, int d,
                        double gamma, int refinement) {
  check_gamma(gamma);
  if (refinement < 4)
    throw InvalidConfig("build_bm_lift: refinement must be >= 4, got " +
                        std::to_string(refinement));
  if (d < 1) throw InvalidInput("build_bm_lift: dimension must be >= 1");
  const TimeGrid fine = grid.refined(static_cast<std::size_t>(refinement));
  const std::size_t m = fine.n_points();
  std::vector<double> samples(m * d, 0.0);
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, std::sqrt(fine.dt()));
  for (std::size_t i = 1; i < m; ++i)
    for (int a = 0; a < d; ++a)
      samples[i * d + a] = samples[(i - 1) * d + a] + normal(rng);
  // Rebase so the path vanishes at absolute time 0 when 0 is on the grid;
  // increments (and hence the lift) are unaffected.
  if (fine.on_grid(0.0)) {
    const std::size_t i0 = fine.index_of(0.0);
    for (int a = 0; a < d; ++a) {
      const double base = samples[i0 * d + a];
      for (std::size_t i = 0; i < m; ++i) samples[i * d + a] -= base;
    }
  }
  return build_smooth_lift(fine, samples, d, grid, gamma);
}

RoughPath pure_area_path(const std::vector<double>& a, const TimeGrid& grid,
                         double gamma) {
  check_gamma(gamma);
  const std::size_t dd = a.size();
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(dd))));
  if (static_cast<std::size_t>(d) * d != dd || d < 1)
    throw InvalidInput("pure_area_path: a must be a square d x d block");
  check_finite(a, "pure_area_path a");
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (std::abs(a[i * d + j] + a[j * d + i]) > 1e-12 * std::max(1.0, scale))
        throw InvalidInput("pure_area_path: a is not antisymmetric");

  const std::size_t n = grid.n_points();
  RoughPath p;
  p.grid = grid;
  p.d = d;
  p.gamma = gamma;
  p.w.assign(n * d, 0.0);
  p.w2.resize((n * (n + 1) / 2) * dd);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double dt = (static_cast<double>(j) - static_cast<double>(i)) * grid.dt();
      double* blk = p.w2_at(i, j);
      for (std::size_t e = 0; e < dd; ++e) blk[e] = dt * a[e];
    }
  return p;
}

double chen_defect(const RoughPath& p, std::uint64_t sample_seed,
                   std::size_t max_samples) {
  const std::size_t n = p.n();
  const int d = p.d;
  if (n < 3) return 0.0;
  std::vector<double> dwki(d), dwjk(d);
  double worst = 0.0;
  auto visit = [&](std::size_t i, std::size_t k, std::size_t j) {
    const double* wi = p.w_at(i);
    const double* wk = p.w_at(k);
    const double* wj = p.w_at(j);
    for (int a = 0; a < d; ++a) {
      dwki[a] = wk[a] - wi[a];
      dwjk[a] = wj[a] - wk[a];
    }
    const double r = kernels::chen_residual(p.w2_at(i, j), p.w2_at(k, j),
                                            p.w2_at(i, k), dwki.data(),
                                            dwjk.data(), d);
    if (r > worst) worst = r;
  };

  const std::size_t total_triples = n * (n - 1) * (n - 2) / 6;
  if (n <= 257 || total_triples <= max_samples) {
    for (std::size_t i = 0; i + 2 < n; ++i)
      for (std::size_t k = i + 1; k + 1 < n; ++k)
        for (std::size_t j = k + 1; j < n; ++j) visit(i, k, j);
  } else {
    std::mt19937_64 rng(splitmix64(sample_seed ^ 0x9d2c5680u));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t done = 0;
    while (done < max_samples) {
      std::size_t x = pick(rng), y = pick(rng), z = pick(rng);
      if (x > y) std::swap(x, y);
      if (y > z) std::swap(y, z);
      if (x > y) std::swap(x, y);
      if (x == y || y == z) continue;
      visit(x, y, z);
      ++done;
    }
  }
  return worst;
}

PathHolderNorms holder_norms(const RoughPath& p) {
  const std::size_t n = p.n();
  const int d = p.d;
  const std::vector<double> inv1 = inv_power_table(p.grid, 2.0 * p.gamma);
  const std::vector<double> inv2 = inv_power_table(p.grid, 2.0 * p.gamma);
  PathHolderNorms out;
  double best1 = 0.0;  // squared, scaled
  double best2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t m = j - i;
      const double lvl1 = kernels::diff_normsq(p.w_at(j), p.w_at(i), d) * inv1[m];
      if (lvl1 > best1) best1 = lvl1;
      const double lvl2 = kernels::maxabs(p.w2_at(i, j), static_cast<std::size_t>(d) * d) *
                          inv2[m];
      if (lvl2 > best2) best2 = lvl2;
    }
  out.w_gamma = std::sqrt(best1);
  // inv2 carries (t-s)^(-2 gamma); the level-2 scan is linear in the block.
  out.w2_2gamma = best2;
  return out;
}

RoughPath shift(const RoughPath& p, double tau) {
  if (tau == 0.0) return p;
  const double ratio = tau / p.grid.dt();
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw GridMismatch("shift: tau is not a multiple of the grid spacing");
  if (!p.grid.on_grid(tau))
    throw OutOfRange("shift: tau = " + std::to_string(tau) +
                     " outside the stored extent");
  const std::size_t m = p.grid.index_of(tau);
  RoughPath out;
  out.grid = TimeGrid(p.grid.t0() - tau, p.grid.t1() - tau, p.grid.n_points());
  out.d = p.d;
  out.gamma = p.gamma;
  out.w = p.w;
  const double* base = p.w_at(m);
  for (std::size_t i = 0; i < p.n(); ++i)
    for (int a = 0; a < p.d; ++a) out.w[i * p.d + a] -= base[a];
  out.w2 = p.w2;  // pairs translate with the grid
  return out;
}

RoughPath window(const RoughPath& p, double a, double b) {
  if (!p.grid.on_grid(a) || !p.grid.on_grid(b))
    throw OutOfRange("window: endpoints must be on-grid times inside the extent");
  const std::size_t i0 = p.grid.index_of(a);
  const std::size_t i1 = p.grid.index_of(b);
  if (i0 >= i1) throw InvalidInput("window: need a < b");
  const std::size_t n = i1 - i0 + 1;
  const std::size_t dd = static_cast<std::size_t>(p.d) * p.d;
  RoughPath out;
  out.grid = p.grid.window(i0, i1);
  out.d = p.d;
  out.gamma = p.gamma;
  out.w.assign(p.w.begin() + i0 * p.d, p.w.begin() + (i1 + 1) * p.d);
  out.w2.resize((n * (n + 1) / 2) * dd);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double* src = p.w2_at(i0 + i, i0 + j);
      double* dst = out.w2_at(i, j);
      for (std::size_t e = 0; e < dd; ++e) dst[e] = src[e];
    }
  return out;
}

double rough_metric(const RoughPath& p, const RoughPath& q) {
  if (p.d != q.d || p.grid != q.grid)
    throw GridMismatch("rough_metric: paths live on different grids or dimensions");
  if (p.gamma != q.gamma)
    throw GridMismatch("rough_metric: paths carry different Hoelder exponents");
  const std::size_t n = p.n();
  const int d = p.d;
  const std::size_t dd = static_cast<std::size_t>(d) * d;
  const std::vector<double> inv1 = inv_power_table(p.grid, 2.0 * p.gamma);
  const std::vector<double> inv2 = inv_power_table(p.grid, 2.0 * p.gamma);
  double best1 = 0.0, best2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t m = j - i;
      double s = 0.0;
      for (int a = 0; a < d; ++a) {
        const double r = (p.w_at(j)[a] - p.w_at(i)[a]) - (q.w_at(j)[a] - q.w_at(i)[a]);
        s += r * r;
      }
      if (s * inv1[m] > best1) best1 = s * inv1[m];
      const double lvl2 = kernels::maxabs_diff(p.w2_at(i, j), q.w2_at(i, j), dd) * inv2[m];
      if (lvl2 > best2) best2 = lvl2;
    }
  return std::sqrt(best1) + best2;
}

}  // namespace roughflow
