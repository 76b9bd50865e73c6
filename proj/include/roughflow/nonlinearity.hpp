#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace roughflow {

// Pointwise scalar profile with derivatives up to third order. `lip` is
// sup|F'| over the real line; `stationary_order` is the largest k in {0,1,2}
// such that F and its first k derivatives vanish at 0.
struct ProfileInfo {
  const char* name;
  double (*F)(double);
  double (*F1)(double);
  double (*F2)(double);
  double (*F3)(double);
  double lip;
  int stationary_order;
};

const ProfileInfo& profile(const std::string& name);

// Orthonormal sine collocation matrix (symmetric, its own inverse), row-major
// n x n. Maps mode coefficients to values on the interior collocation grid.
std::vector<double> collocation_matrix(std::size_t n);

// Scalar bump used to truncate trajectories: 1 on [0,1/2], 0 on [1,inf),
// C^3 across the joints. Monotone nonincreasing.
struct CutoffConfig {
  double K = 0.0;  // contraction budget the radius was solved for
  double R = 1.0;  // truncation radius, in (0,1]

  void validate() const;

  static double phi(double x);
  static double dphi(double x);
  static double d2phi(double x);
  static double d3phi(double x);
  // sup-norms of |phi'|, |phi''|, |phi'''|
  static double phi_bound(int order);
};

enum class NonlinKind { zero, linear, collocation };

// A map H -> H^m in coefficient space, m = out_width. Three flavors: the zero
// map, a diagonal (mode-wise) linear map, and pointwise profiles applied
// through the sine collocation transform. Channels can carry individual
// scales. All flavors fix 0 and have a finite, queryable Lipschitz constant
// with respect to the Euclidean coefficient norm.
class Nonlinearity {
 public:
  static Nonlinearity zero(std::size_t n_modes, std::size_t out_width);
  static Nonlinearity linear(std::vector<double> mode_gains, std::size_t out_width,
                             std::vector<double> channel_scales = {});
  static Nonlinearity collocation(const std::string& profile_name, std::size_t n_modes,
                                  std::size_t out_width, double amplitude = 1.0,
                                  std::vector<double> channel_scales = {});

  std::size_t n_modes() const { return n_modes_; }
  std::size_t out_width() const { return out_width_; }
  NonlinKind kind() const { return kind_; }
  double lip() const { return lip_; }
  int stationary_order() const { return stationary_order_; }
  void require_drift_stationary() const;      // F(0)=0 and DF(0)=0
  void require_diffusion_stationary() const;  // additionally D2F(0)=0

  // out has out_width * n_modes entries, channel-major.
  void eval(const double* y, double* out) const;
  void deriv_apply(const double* y, const double* v, double* out) const;
  void deriv2_apply(const double* y, const double* v1, const double* v2,
                    double* out) const;
  void deriv3_apply(const double* y, const double* v1, const double* v2,
                    const double* v3, double* out) const;

  const std::optional<CutoffConfig>& truncation() const { return truncation_; }

  friend Nonlinearity truncated_nonlinearity(const Nonlinearity& fg,
                                             const CutoffConfig& cfg);

 private:
  Nonlinearity() = default;

  NonlinKind kind_ = NonlinKind::zero;
  std::size_t n_modes_ = 0;
  std::size_t out_width_ = 1;
  double amplitude_ = 1.0;
  double lip_ = 0.0;
  int stationary_order_ = 2;
  std::vector<double> mode_gains_;      // linear kind
  std::vector<double> channel_scales_;  // always out_width entries
  std::vector<double> transform_;       // collocation kind, n x n
  const ProfileInfo* profile_ = nullptr;
  std::optional<CutoffConfig> truncation_;
};

// Wraps fg so that users evaluate it on radius-R truncated trajectories; the
// trajectory-level factor is applied by the composition and solver layers,
// which query truncation(). Requires fg to fix 0 with vanishing derivative.
Nonlinearity truncated_nonlinearity(const Nonlinearity& fg, const CutoffConfig& cfg);

}  // namespace roughflow
