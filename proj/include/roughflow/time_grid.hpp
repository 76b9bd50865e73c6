#pragma once

#include <cstddef>
#include <vector>

#include "roughflow/errors.hpp"

namespace roughflow {

// Uniform time grid t_i = t0 + i*dt, i = 0..n_points-1.
//
// All path/trajectory objects in the library live on one of these. Uniformity
// is part of the contract (checked to 1e-12 relative tolerance when a grid is
// rebuilt from sampled times); alignment questions (shifts, windows,
// refinements) are settled in exact index arithmetic, never by comparing
// floating-point times directly.
class TimeGrid {
 public:
  TimeGrid() : t0_(0.0), t1_(1.0), n_(2) {}
  TimeGrid(double t0, double t1, std::size_t n_points);

  // Validates near-uniform spacing (1e-12 relative) and reconstructs the grid.
  static TimeGrid from_points(const std::vector<double>& times);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  std::size_t n_points() const { return n_; }
  std::size_t n_intervals() const { return n_ - 1; }
  double dt() const { return (t1_ - t0_) / static_cast<double>(n_ - 1); }
  double span() const { return t1_ - t0_; }

  double point(std::size_t i) const;

  // Nearest-index lookup; throws GridMismatch when t is not on the grid
  // (1e-9 relative tolerance in units of dt).
  std::size_t index_of(double t) const;
  bool on_grid(double t) const;

  // True when `other` samples a subset of this grid's points (same dt, nested
  // endpoints). Used by window extraction.
  bool contains(const TimeGrid& other) const;

  // Sub-grid [point(i0), point(i1)].
  TimeGrid window(std::size_t i0, std::size_t i1) const;

  // Grid with (n-1)*factor + 1 points over the same span.
  TimeGrid refined(std::size_t factor) const;

  bool operator==(const TimeGrid& other) const;
  bool operator!=(const TimeGrid& other) const { return !(*this == other); }

 private:
  double t0_, t1_;
  std::size_t n_;
};

}  // namespace roughflow
