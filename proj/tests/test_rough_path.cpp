#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "roughflow/errors.hpp"
#include "roughflow/rng.hpp"
#include "roughflow/rough_path.hpp"

using namespace roughflow;

namespace {

// Densely sampled scalar path w_t = v t.
RoughPath linear_path(double v, const TimeGrid& target, double gamma, int refine = 8) {
  const TimeGrid fine = target.refined(refine);
  std::vector<double> s(fine.n_points());
  for (std::size_t i = 0; i < fine.n_points(); ++i) s[i] = v * fine.point(i);
  return build_smooth_lift(fine, s, 1, target, gamma);
}

RoughPath random_table_path(std::mt19937_64& rng, const TimeGrid& g, int d, double gamma) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = g.n_points();
  std::vector<double> w(n * d), w2((n * (n + 1) / 2) * d * d);
  for (double& x : w) x = u(rng);
  for (double& x : w2) x = u(rng);
  // Zero the diagonal blocks so the object is at least structurally sane.
  RoughPath p = make_rough_path(g, d, gamma, std::move(w), std::move(w2), false);
  for (std::size_t i = 0; i < n; ++i) {
    double* blk = p.w2_at(i, i);
    for (int e = 0; e < d * d; ++e) blk[e] = 0.0;
  }
  return p;
}

}  // namespace

TEST_CASE("smooth lift of a linear path") {
  const TimeGrid g(0.0, 1.0, 33);
  const double v = 1.7;
  const RoughPath p = linear_path(v, g, 0.5);
  // w2(s,t) = v^2 (t-s)^2 / 2 exactly.
  for (std::size_t i = 0; i < g.n_points(); i += 5)
    for (std::size_t j = i; j < g.n_points(); j += 7) {
      const double dt = g.point(j) - g.point(i);
      CHECK(p.w2_at(i, j)[0] == doctest::Approx(0.5 * v * v * dt * dt).epsilon(1e-12));
    }
  CHECK(chen_defect(p) <= 1e-12);
  const PathHolderNorms h = holder_norms(p);
  CHECK(h.w_gamma == doctest::Approx(std::abs(v)).epsilon(1e-12));
}

TEST_CASE("smooth lift of a constant path is the zero driver") {
  const TimeGrid g(0.0, 1.0, 17);
  const TimeGrid fine = g.refined(4);
  std::vector<double> s(fine.n_points() * 2, 3.25);
  const RoughPath p = build_smooth_lift(fine, s, 2, g, 0.45);
  const PathHolderNorms h = holder_norms(p);
  CHECK(h.w_gamma == 0.0);
  CHECK(h.w2_2gamma == 0.0);
}

TEST_CASE("iterated integral of (t, t^2) matches quadrature") {
  // target mesh 0.01, internal mesh 1e-4.
  const TimeGrid target(0.0, 1.0, 101);
  const TimeGrid fine = target.refined(100);
  std::vector<double> s(fine.n_points() * 2);
  for (std::size_t i = 0; i < fine.n_points(); ++i) {
    const double t = fine.point(i);
    s[2 * i] = t;
    s[2 * i + 1] = t * t;
  }
  const RoughPath p = build_smooth_lift(fine, s, 2, target, 0.5);
  // int_0^1 w^1 dw^2 = int_0^1 t d(t^2) = 2/3.
  const double full = p.w2_at(0, 100)[0 * 2 + 1];
  CHECK(full == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(chen_defect(p) <= 1e-12);
}

TEST_CASE("lift rejects bad inputs") {
  const TimeGrid g(0.0, 1.0, 9);
  const TimeGrid other(0.0, 1.1, 33);
  std::vector<double> s(other.n_points(), 0.0);
  CHECK_THROWS_AS(build_smooth_lift(other, s, 1, g, 0.5), GridMismatch);
  const TimeGrid fine = g.refined(4);
  std::vector<double> bad(fine.n_points(), 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(build_smooth_lift(fine, bad, 1, g, 0.5), InvalidInput);
  std::vector<double> ok(fine.n_points(), 0.0);
  CHECK_THROWS_AS(build_smooth_lift(fine, ok, 1, g, 0.75), InvalidConfig);
}

TEST_CASE("brownian lift: geometric symmetry and chen") {
  const TimeGrid g(0.0, 1.0, 65);
  for (std::uint64_t seed : {1ull, 2ull, 99ull}) {
    const RoughPath p = build_bm_lift(seed, g, 2, 0.45, 8);
    CHECK(chen_defect(p) <= 1e-10);
    // Sym(w2) = dw (x) dw / 2 exactly for the geometric lift.
    for (std::size_t i = 0; i < 64; i += 9)
      for (std::size_t j = i + 1; j < 65; j += 11) {
        const double* blk = p.w2_at(i, j);
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b) {
            const double sym = 0.5 * (blk[a * 2 + b] + blk[b * 2 + a]);
            const double dwa = p.w_at(j)[a] - p.w_at(i)[a];
            const double dwb = p.w_at(j)[b] - p.w_at(i)[b];
            CHECK(sym == doctest::Approx(0.5 * dwa * dwb).epsilon(1e-12));
          }
      }
  }
  CHECK_THROWS_AS(build_bm_lift(1, g, 2, 0.45, 3), InvalidConfig);
  // Deterministic in the seed.
  const RoughPath a = build_bm_lift(5, g, 1, 0.5, 4);
  const RoughPath b = build_bm_lift(5, g, 1, 0.5, 4);
  CHECK(a.w == b.w);
  CHECK(a.w2 == b.w2);
}

TEST_CASE("brownian antisymmetric area has mean zero (ensemble)") {
  const TimeGrid g(0.0, 1.0, 9);
  const int m = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < m; ++s) {
    const RoughPath p = build_bm_lift(1000 + s, g, 2, 0.45, 8);
    const double* blk = p.w2_at(0, 8);
    const double anti = 0.5 * (blk[0 * 2 + 1] - blk[1 * 2 + 0]);
    sum += anti;
    sumsq += anti * anti;
  }
  const double mean = sum / m;
  const double var = sumsq / m - mean * mean;
  const double se = std::sqrt(var / m);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("pure area path") {
  const TimeGrid g(0.0, 1.0, 33);
  const std::vector<double> a = {0.0, 1.0, -1.0, 0.0};
  const RoughPath p = pure_area_path(a, g, 0.5);
  CHECK(chen_defect(p) == 0.0);
  const PathHolderNorms h = holder_norms(p);
  CHECK(h.w_gamma == 0.0);
  CHECK(h.w2_2gamma == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> zero = {0.0, 0.0, 0.0, 0.0};
  const RoughPath z = pure_area_path(zero, g, 0.5);
  CHECK(holder_norms(z).w2_2gamma == 0.0);

  const std::vector<double> bad = {0.0, 1.0, 1.0, 0.0};
  CHECK_THROWS_AS(pure_area_path(bad, g, 0.5), InvalidInput);
}

TEST_CASE("chen defect flags a corrupted table") {
  const TimeGrid g(0.0, 1.0, 17);
  RoughPath p = linear_path(0.8, g, 0.5);
  p.w2_at(2, 9)[0] += 0.1;
  CHECK(chen_defect(p) >= 0.1 - 1e-12);
}

TEST_CASE("holder norms stabilize under grid refinement (brownian)") {
  // One underlying fine path, lifted onto nested targets.
  const TimeGrid coarse(0.0, 1.0, 2049);
  const TimeGrid fine = coarse.refined(16);
  std::vector<double> s(fine.n_points());
  std::mt19937_64 rng(make_rng(31337, "driver"));
  std::normal_distribution<double> nd(0.0, std::sqrt(fine.dt()));
  for (std::size_t i = 1; i < fine.n_points(); ++i) s[i] = s[i - 1] + nd(rng);

  auto norm_at = [&](std::size_t npts) {
    const TimeGrid target(0.0, 1.0, npts);
    return holder_norms(build_smooth_lift(fine, s, 1, target, 0.45));
  };
  const PathHolderNorms h257 = norm_at(257);
  const PathHolderNorms h1025 = norm_at(1025);
  const PathHolderNorms h2049 = norm_at(2049);
  CHECK(std::isfinite(h257.w_gamma));
  CHECK(h1025.w_gamma <= h2049.w_gamma + 1e-12);  // discrete sup grows with refinement
  // The sup creeps up as pairs are added but must not double; that would mean
  // the path fails to be gamma-Holder at this gamma.
  CHECK(h2049.w_gamma / h1025.w_gamma < 1.25);
  CHECK(h2049.w2_2gamma / h1025.w2_2gamma < 1.25);
}

TEST_CASE("shift semantics") {
  const TimeGrid g(0.0, 1.0, 33);
  const RoughPath p = build_bm_lift(77, g, 2, 0.45, 8);

  SUBCASE("zero shift is the identity, bit for bit") {
    const RoughPath q = shift(p, 0.0);
    CHECK(q.w == p.w);
    CHECK(q.w2 == p.w2);
    CHECK(q.grid == p.grid);
  }

  SUBCASE("off-grid or out-of-extent shifts are rejected") {
    CHECK_THROWS_AS(shift(p, 0.01), GridMismatch);
    CHECK_THROWS_AS(shift(p, 2.0), OutOfRange);
  }

  SUBCASE("cocycle identity for the second level") {
    const double s = 0.25;
    const RoughPath q = shift(p, s);
    const std::size_t is = p.grid.index_of(s);
    // w2 of the shifted path at (0, t) equals w2 of p at (s, s+t).
    for (std::size_t j = 0; j + is < p.n(); j += 3) {
      const double* lhs = q.w2_at(is, is + j);  // shifted grid, same indices
      const double* rhs = p.w2_at(is, is + j);
      for (int e = 0; e < 4; ++e) CHECK(lhs[e] == rhs[e]);
    }
    // First level rebating: value of the shifted path at absolute 0 vanishes.
    CHECK(q.w_at(q.grid.index_of(0.0))[0] == 0.0);
  }

  SUBCASE("group action") {
    const RoughPath extended = build_bm_lift(3, TimeGrid(-1.0, 1.0, 65), 1, 0.45, 8);
    const RoughPath ab = shift(shift(extended, 0.25), 0.25);
    const RoughPath once = shift(extended, 0.5);
    REQUIRE(ab.n() == once.n());
    for (std::size_t i = 0; i < ab.n(); ++i)
      CHECK(ab.w_at(i)[0] == doctest::Approx(once.w_at(i)[0]).epsilon(1e-13));
    CHECK(ab.grid.t0() == doctest::Approx(once.grid.t0()).epsilon(1e-14));
  }

  SUBCASE("linear path shifts to itself") {
    const RoughPath lin = linear_path(2.0, TimeGrid(0.0, 1.0, 17), 0.5);
    const RoughPath q = shift(lin, 0.5);
    // Still linear with the same slope, and zero at absolute time 0.
    const std::size_t i0 = q.grid.index_of(0.0);
    CHECK(q.w_at(i0)[0] == doctest::Approx(0.0));
    for (std::size_t i = 0; i < q.n(); ++i)
      CHECK(q.w_at(i)[0] == doctest::Approx(2.0 * q.grid.point(i)).epsilon(1e-12));
  }
}

TEST_CASE("window extraction") {
  const TimeGrid g(-1.0, 1.0, 65);
  const RoughPath p = build_bm_lift(11, g, 1, 0.45, 8);
  const RoughPath sub = window(p, 0.0, 1.0);
  CHECK(sub.grid.t0() == doctest::Approx(0.0));
  CHECK(sub.n() == 33);
  const std::size_t off = p.grid.index_of(0.0);
  for (std::size_t i = 0; i < sub.n(); ++i)
    CHECK(sub.w_at(i)[0] == p.w_at(off + i)[0]);
  for (std::size_t i = 0; i < sub.n(); i += 5)
    for (std::size_t j = i; j < sub.n(); j += 3)
      CHECK(sub.w2_at(i, j)[0] == p.w2_at(off + i, off + j)[0]);
  CHECK_THROWS_AS(window(p, 0.0, 1.5), OutOfRange);
}

TEST_CASE("rough metric") {
  const TimeGrid g(0.0, 1.0, 33);
  const RoughPath p = build_bm_lift(5, g, 2, 0.45, 8);
  CHECK(rough_metric(p, p) == 0.0);

  SUBCASE("scaled-path distance equals the norm of the difference") {
    RoughPath q = p;
    for (double& x : q.w) x *= 2.0;
    for (double& x : q.w2) x *= 4.0;
    // Difference tables (not a rough path; assembled for norm computation only).
    std::vector<double> dw(p.w.size()), dw2(p.w2.size());
    for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = q.w[i] - p.w[i];
    for (std::size_t i = 0; i < dw2.size(); ++i) dw2[i] = q.w2[i] - p.w2[i];
    const RoughPath diff = make_rough_path(g, 2, 0.45, dw, dw2, false);
    const PathHolderNorms h = holder_norms(diff);
    CHECK(rough_metric(p, q) == doctest::Approx(h.w_gamma + h.w2_2gamma).epsilon(1e-12));
  }

  SUBCASE("symmetry and triangle inequality") {
    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 8; ++rep) {
      const RoughPath a = random_table_path(rng, g, 2, 0.45);
      const RoughPath b = random_table_path(rng, g, 2, 0.45);
      const RoughPath c = random_table_path(rng, g, 2, 0.45);
      CHECK(rough_metric(a, b) == doctest::Approx(rough_metric(b, a)).epsilon(1e-13));
      CHECK(rough_metric(a, c) <= rough_metric(a, b) + rough_metric(b, c) + 1e-12);
    }
  }

  SUBCASE("mismatched grids are rejected") {
    const RoughPath r = build_bm_lift(5, TimeGrid(0.0, 1.0, 17), 2, 0.45, 8);
    CHECK_THROWS_AS(rough_metric(p, r), GridMismatch);
  }
}

TEST_CASE("csv round trip is bit exact") {
  const TimeGrid g(0.0, 1.0, 17);
  const RoughPath p = build_bm_lift(123, g, 2, 0.45, 8);
  const std::string l1 = "/tmp/rp_test_l1.csv", l2 = "/tmp/rp_test_l2.csv";
  save_rough_path_csv(p, l1, l2);
  const RoughPath q = load_rough_path_csv(l1, l2, p.gamma);
  CHECK(q.w == p.w);
  CHECK(q.w2 == p.w2);
  CHECK(q.grid == p.grid);
  std::remove(l1.c_str());
  std::remove(l2.c_str());
}

TEST_CASE("json round trip is bit exact") {
  const TimeGrid g(-0.5, 1.0, 13);
  const RoughPath p = build_bm_lift(9, g, 2, 0.4, 8);
  const std::string path = "/tmp/rp_test.json";
  save_rough_path_json(p, path);
  const RoughPath q = load_rough_path_json(path);
  CHECK(q.w == p.w);
  CHECK(q.w2 == p.w2);
  CHECK(q.grid == p.grid);
  CHECK(q.gamma == p.gamma);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_rough_path_json("/tmp/does_not_exist_rp.json"), InvalidInput);
}
