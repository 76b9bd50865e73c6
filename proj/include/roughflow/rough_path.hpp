#pragma once

#include <cstdint>
#include <vector>

#include "roughflow/time_grid.hpp"

namespace roughflow {

// Level-2 rough path on a uniform grid: first-level samples w (one
// d-component value per grid point) and second-level increments
//
//   w2(s,t)[a*d + b]  ~  int_s^t (w^a_u - w^a_s) dw^b_u,
//
// stored densely for every ordered grid pair s <= t in a packed triangular
// table. Dense pair storage is deliberate: it makes every on-grid increment
// available in O(1) and keeps the Chen audit an exact table scan instead of a
// reconstruction.
//
// Block norms on w2 values are max-abs over the d*d entries; first-level
// increments use the Euclidean norm.
struct RoughPath {
  TimeGrid grid;
  int d = 1;
  double gamma = 0.5;              // Hoelder exponent, must be in (1/3, 1/2]
  std::vector<double> w;           // [n][d]
  std::vector<double> w2;          // [pair(i<=j)][d*d], lexicographic in (i, j)

  std::size_t n() const { return grid.n_points(); }
  // Index into the packed (i <= j) pair table.
  std::size_t pair_index(std::size_t i, std::size_t j) const;
  const double* w_at(std::size_t i) const { return w.data() + i * d; }
  double* w_at(std::size_t i) { return w.data() + i * d; }
  const double* w2_at(std::size_t i, std::size_t j) const {
    return w2.data() + pair_index(i, j) * (d * d);
  }
  double* w2_at(std::size_t i, std::size_t j) {
    return w2.data() + pair_index(i, j) * (d * d);
  }
};

// Assemble from raw tables; validates shapes/finiteness, and (optionally) a
// sampled Chen audit at chen_tol. Used by deserialization and tests.
RoughPath make_rough_path(const TimeGrid& grid, int d, double gamma,
                          std::vector<double> w, std::vector<double> w2,
                          bool validate = true);

// Canonical lift of a densely sampled path: w restricts the samples to the
// target grid, w2 is the trapezoid value of the iterated integral over the
// internal grid. For the piecewise-linear interpolant this is exact, so Chen
// holds to rounding by construction.
RoughPath build_smooth_lift(const TimeGrid& internal_grid,
                            const std::vector<double>& samples, int d,
                            const TimeGrid& target, double gamma);

// Geometric (Stratonovich-consistent) lift of Brownian motion sampled on an
// internally refined grid. Deterministic in the seed. refinement >= 4.
// When t = 0 is a grid point the first level is normalized so w(0) = 0.
RoughPath build_bm_lift(std::uint64_t seed, const TimeGrid& grid, int d,
                        double gamma, int refinement = 16);

// Stress driver: w == 0, w2(s,t) = (t-s) * a with antisymmetric a.
RoughPath pure_area_path(const std::vector<double>& a, const TimeGrid& grid,
                         double gamma);

// Max over grid triples s <= u <= t of the Chen residual
// |w2(s,t) - w2(u,t) - w2(s,u) - dw(s,u) (x) dw(u,t)| (max-abs over entries).
// Full scan up to n = 257 points, seeded random triple sampling above.
double chen_defect(const RoughPath& p, std::uint64_t sample_seed = 0,
                   std::size_t max_samples = 2'000'000);

struct PathHolderNorms {
  double w_gamma = 0.0;    // sup |dw(s,t)| / (t-s)^gamma
  double w2_2gamma = 0.0;  // sup |w2(s,t)| / (t-s)^(2 gamma)
};
PathHolderNorms holder_norms(const RoughPath& p);

// Time shift: grid moves to [t0 - tau, t1 - tau], first level is rebased at
// the stored value w(tau), second level is untouched (pairs translate). tau
// must be an on-grid time of p; shift(p, 0) returns p unchanged.
RoughPath shift(const RoughPath& p, double tau);

// Restriction to the on-grid window [a, b] (no rebasing).
RoughPath window(const RoughPath& p, double a, double b);

// |w - w~|_gamma + |w2 - w2~|_{2 gamma} over the common grid.
double rough_metric(const RoughPath& p, const RoughPath& q);

// Serialization. CSV uses two files (first level: t,w_1..w_d; second level:
// s,t,w2_11..w2_dd for all pairs s <= t); JSON is a single document carrying
// grid and gamma metadata. Values round-trip bit-exact for finite doubles.
void save_rough_path_csv(const RoughPath& p, const std::string& level1_path,
                         const std::string& level2_path);
RoughPath load_rough_path_csv(const std::string& level1_path,
                              const std::string& level2_path, double gamma);
void save_rough_path_json(const RoughPath& p, const std::string& path);
RoughPath load_rough_path_json(const std::string& path);

}  // namespace roughflow
