#include "roughflow/time_grid.hpp"

#include <cmath>
#include <string>

namespace roughflow {

TimeGrid::TimeGrid(double t0, double t1, std::size_t n_points)
    : t0_(t0), t1_(t1), n_(n_points) {
  if (!(std::isfinite(t0) && std::isfinite(t1)))
    throw InvalidInput("TimeGrid: endpoints must be finite");
  if (!(t1 > t0))
    throw InvalidInput("TimeGrid: need t1 > t0, got [" + std::to_string(t0) +
                       ", " + std::to_string(t1) + "]");
  if (n_points < 2) throw InvalidInput("TimeGrid: need at least 2 points");
}

TimeGrid TimeGrid::from_points(const std::vector<double>& times) {
  if (times.size() < 2) throw InvalidInput("TimeGrid: need at least 2 samples");
  const double span = times.back() - times.front();
  if (!(span > 0.0)) throw InvalidInput("TimeGrid: times must increase");
  const double h = span / static_cast<double>(times.size() - 1);
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double step = times[i + 1] - times[i];
    if (!(step > 0.0)) throw InvalidInput("TimeGrid: times must increase");
    if (std::abs(step - h) > 1e-12 * std::max(std::abs(h), std::abs(times[i])))
      throw InvalidInput("TimeGrid: spacing not uniform at sample " +
                         std::to_string(i));
  }
  return TimeGrid(times.front(), times.back(), times.size());
}

double TimeGrid::point(std::size_t i) const {
  if (i >= n_) throw OutOfRange("TimeGrid: index " + std::to_string(i) +
                                " past " + std::to_string(n_ - 1));
  // Convex form keeps point(n-1) == t1 exactly.
  const double s = static_cast<double>(i) / static_cast<double>(n_ - 1);
  return t0_ * (1.0 - s) + t1_ * s;
}

std::size_t TimeGrid::index_of(double t) const {
  const double x = (t - t0_) / dt();
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x)))
    throw GridMismatch("TimeGrid: t = " + std::to_string(t) +
                       " is not a grid point");
  if (r < -0.5 || r > static_cast<double>(n_ - 1) + 0.5)
    throw OutOfRange("TimeGrid: t = " + std::to_string(t) +
                     " outside [" + std::to_string(t0_) + ", " +
                     std::to_string(t1_) + "]");
  return static_cast<std::size_t>(r);
}

bool TimeGrid::on_grid(double t) const {
  const double x = (t - t0_) / dt();
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) && r > -0.5 &&
         r < static_cast<double>(n_ - 1) + 0.5;
}

bool TimeGrid::contains(const TimeGrid& other) const {
  const double h = dt(), ho = other.dt();
  if (std::abs(h - ho) > 1e-12 * h) return false;
  return on_grid(other.t0()) && on_grid(other.t1());
}

TimeGrid TimeGrid::window(std::size_t i0, std::size_t i1) const {
  if (i1 >= n_ || i0 >= i1)
    throw OutOfRange("TimeGrid: bad window [" + std::to_string(i0) + ", " +
                     std::to_string(i1) + "]");
  return TimeGrid(point(i0), point(i1), i1 - i0 + 1);
}

TimeGrid TimeGrid::refined(std::size_t factor) const {
  if (factor < 1) throw InvalidInput("TimeGrid: refinement factor must be >= 1");
  return TimeGrid(t0_, t1_, (n_ - 1) * factor + 1);
}

bool TimeGrid::operator==(const TimeGrid& other) const {
  return n_ == other.n_ && std::abs(t0_ - other.t0_) <= 1e-12 * std::max(1.0, std::abs(t0_)) &&
         std::abs(t1_ - other.t1_) <= 1e-12 * std::max(1.0, std::abs(t1_));
}

}  // namespace roughflow
