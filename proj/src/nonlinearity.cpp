#include "roughflow/nonlinearity.hpp"

#include <cmath>
#include <cstring>

#include "roughflow/errors.hpp"
#include "roughflow/kernels.hpp"

namespace roughflow {

namespace {

double id_F(double u) { return u; }
double id_F1(double) { return 1.0; }
double zero_fn(double) { return 0.0; }

// u^2/(1+u^2): saturating square, vanishing value and slope at 0.
double qs_F(double u) { return u * u / (1.0 + u * u); }
double qs_F1(double u) {
  const double q = 1.0 + u * u;
  return 2.0 * u / (q * q);
}
double qs_F2(double u) {
  const double q = 1.0 + u * u;
  return 2.0 * (1.0 - 3.0 * u * u) / (q * q * q);
}
double qs_F3(double u) {
  const double q = 1.0 + u * u;
  return 24.0 * u * (u * u - 1.0) / (q * q * q * q);
}

// u^3/(1+u^2): saturating cubic, flat to second order at 0.
double cs_F(double u) { return u * u * u / (1.0 + u * u); }
double cs_F1(double u) {
  const double q = 1.0 + u * u;
  return u * u * (3.0 + u * u) / (q * q);
}
double cs_F2(double u) {
  const double q = 1.0 + u * u;
  return 2.0 * u * (3.0 - u * u) / (q * q * q);
}
double cs_F3(double u) {
  const double q = 1.0 + u * u;
  return 6.0 * (1.0 - 6.0 * u * u + u * u * u * u) / (q * q * q * q);
}

double sin_F(double u) { return std::sin(u); }
double sin_F1(double u) { return std::cos(u); }
double sin_F2(double u) { return -std::sin(u); }
double sin_F3(double u) { return -std::cos(u); }

double smi_F(double u) { return std::sin(u) - u; }
double smi_F1(double u) { return std::cos(u) - 1.0; }

double tanh_F(double u) { return std::tanh(u); }
double tanh_F1(double u) {
  const double t = std::tanh(u);
  return 1.0 - t * t;
}
double tanh_F2(double u) {
  const double t = std::tanh(u);
  return -2.0 * t * (1.0 - t * t);
}
double tanh_F3(double u) {
  const double t = std::tanh(u);
  return -2.0 * (1.0 - t * t) * (1.0 - 3.0 * t * t);
}

const ProfileInfo kProfiles[] = {
    {"identity", id_F, id_F1, zero_fn, zero_fn, 1.0, 0},
    // sup|F'| = 9/(8*sqrt(3)) at u = 1/sqrt(3)
    {"quadratic_sat", qs_F, qs_F1, qs_F2, qs_F3, 0.6495190528383290, 1},
    // sup|F'| = 9/8 at u = sqrt(3)
    {"cubic_sat", cs_F, cs_F1, cs_F2, cs_F3, 1.125, 2},
    {"sin", sin_F, sin_F1, sin_F2, sin_F3, 1.0, 0},
    {"sin_minus_id", smi_F, smi_F1, sin_F2, sin_F3, 2.0, 2},
    {"tanh", tanh_F, tanh_F1, tanh_F2, tanh_F3, 1.0, 0},
};

double smoothstep7(double t) {
  // s(0)=0, s(1)=1 with three vanishing derivatives at both ends.
  const double t4 = t * t * t * t;
  return t4 * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t);
}
double smoothstep7_d1(double t) {
  const double a = t * (1.0 - t);
  return 140.0 * a * a * a;
}
double smoothstep7_d2(double t) {
  const double a = t * (1.0 - t);
  return 420.0 * a * a * (1.0 - 2.0 * t);
}
double smoothstep7_d3(double t) {
  const double a = t * (1.0 - t);
  const double b = 1.0 - 2.0 * t;
  return 420.0 * (2.0 * a * b * b - 2.0 * a * a);
}

}  // namespace

const ProfileInfo& profile(const std::string& name) {
  for (const ProfileInfo& p : kProfiles)
    if (name == p.name) return p;
  throw InvalidConfig("unknown nonlinearity profile: " + name);
}

std::vector<double> collocation_matrix(std::size_t n) {
  if (n == 0) throw InvalidConfig("collocation matrix needs n >= 1");
  std::vector<double> m(n * n);
  const double scale = std::sqrt(2.0 / double(n + 1));
  const double step = M_PI / double(n + 1);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      m[j * n + k] = scale * std::sin(double(j + 1) * double(k + 1) * step);
  return m;
}

void CutoffConfig::validate() const {
  if (!(R > 0.0) || R > 1.0) throw InvalidConfig("cutoff radius must lie in (0,1]");
  if (!(K >= 0.0)) throw InvalidConfig("cutoff budget must be nonnegative");
}

double CutoffConfig::phi(double x) {
  if (x <= 0.5) return 1.0;
  if (x >= 1.0) return 0.0;
  return 1.0 - smoothstep7(2.0 * x - 1.0);
}
double CutoffConfig::dphi(double x) {
  if (x <= 0.5 || x >= 1.0) return 0.0;
  return -2.0 * smoothstep7_d1(2.0 * x - 1.0);
}
double CutoffConfig::d2phi(double x) {
  if (x <= 0.5 || x >= 1.0) return 0.0;
  return -4.0 * smoothstep7_d2(2.0 * x - 1.0);
}
double CutoffConfig::d3phi(double x) {
  if (x <= 0.5 || x >= 1.0) return 0.0;
  return -8.0 * smoothstep7_d3(2.0 * x - 1.0);
}
double CutoffConfig::phi_bound(int order) {
  switch (order) {
    case 1:
      return 2.0 * 140.0 / 64.0;  // |s'| peaks at the midpoint
    case 2: {
      double m = 0.0;
      for (int i = 0; i <= 4096; ++i)
        m = std::max(m, std::abs(d2phi(0.5 + 0.5 * i / 4096.0)));
      return m;
    }
    case 3: {
      double m = 0.0;
      for (int i = 0; i <= 4096; ++i)
        m = std::max(m, std::abs(d3phi(0.5 + 0.5 * i / 4096.0)));
      return m;
    }
    default:
      throw InvalidInput("phi_bound supports orders 1..3");
  }
}

Nonlinearity Nonlinearity::zero(std::size_t n_modes, std::size_t out_width) {
  if (n_modes == 0 || out_width == 0) throw InvalidConfig("zero map needs positive sizes");
  Nonlinearity g;
  g.kind_ = NonlinKind::zero;
  g.n_modes_ = n_modes;
  g.out_width_ = out_width;
  g.lip_ = 0.0;
  g.stationary_order_ = 2;
  g.channel_scales_.assign(out_width, 0.0);
  return g;
}

Nonlinearity Nonlinearity::linear(std::vector<double> mode_gains, std::size_t out_width,
                                  std::vector<double> channel_scales) {
  if (mode_gains.empty() || out_width == 0)
    throw InvalidConfig("linear map needs positive sizes");
  if (channel_scales.empty()) channel_scales.assign(out_width, 1.0);
  if (channel_scales.size() != out_width)
    throw InvalidConfig("channel_scales must have out_width entries");
  Nonlinearity g;
  g.kind_ = NonlinKind::linear;
  g.n_modes_ = mode_gains.size();
  g.out_width_ = out_width;
  g.mode_gains_ = std::move(mode_gains);
  g.channel_scales_ = std::move(channel_scales);
  double cs2 = 0.0, gmax = 0.0;
  for (double s : g.channel_scales_) cs2 += s * s;
  for (double m : g.mode_gains_) gmax = std::max(gmax, std::abs(m));
  g.lip_ = std::sqrt(cs2) * gmax;
  g.stationary_order_ = (g.lip_ == 0.0) ? 2 : 0;
  return g;
}

Nonlinearity Nonlinearity::collocation(const std::string& profile_name,
                                       std::size_t n_modes, std::size_t out_width,
                                       double amplitude,
                                       std::vector<double> channel_scales) {
  if (n_modes == 0 || out_width == 0)
    throw InvalidConfig("collocation map needs positive sizes");
  if (channel_scales.empty()) channel_scales.assign(out_width, 1.0);
  if (channel_scales.size() != out_width)
    throw InvalidConfig("channel_scales must have out_width entries");
  Nonlinearity g;
  g.kind_ = NonlinKind::collocation;
  g.n_modes_ = n_modes;
  g.out_width_ = out_width;
  g.amplitude_ = amplitude;
  g.channel_scales_ = std::move(channel_scales);
  g.profile_ = &profile(profile_name);
  g.transform_ = collocation_matrix(n_modes);

  // The transform must be an involution; a broken table would silently wreck
  // every Lipschitz and stationarity property we advertise.
  std::vector<double> probe(n_modes), mid(n_modes), back(n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) probe[k] = std::cos(1.7 * double(k + 1));
  for (std::size_t j = 0; j < n_modes; ++j)
    mid[j] = kernels::dot(g.transform_.data() + j * n_modes, probe.data(), n_modes);
  for (std::size_t j = 0; j < n_modes; ++j)
    back[j] = kernels::dot(g.transform_.data() + j * n_modes, mid.data(), n_modes);
  if (std::sqrt(kernels::diff_normsq(back.data(), probe.data(), n_modes)) >
      1e-12 * std::sqrt(kernels::normsq(probe.data(), n_modes)))
    throw AssumptionError("collocation transform failed the round-trip check");

  double cs2 = 0.0;
  for (double s : g.channel_scales_) cs2 += s * s;
  g.lip_ = std::abs(amplitude) * std::sqrt(cs2) * g.profile_->lip;
  g.stationary_order_ = (g.lip_ == 0.0) ? 2 : g.profile_->stationary_order;
  return g;
}

void Nonlinearity::require_drift_stationary() const {
  if (stationary_order_ < 1)
    throw AssumptionError("drift must vanish to first order at 0");
}

void Nonlinearity::require_diffusion_stationary() const {
  if (stationary_order_ < 2)
    throw AssumptionError("diffusion must vanish to second order at 0");
}

void Nonlinearity::eval(const double* y, double* out) const {
  const std::size_t N = n_modes_;
  switch (kind_) {
    case NonlinKind::zero:
      std::memset(out, 0, out_width_ * N * sizeof(double));
      return;
    case NonlinKind::linear:
      for (std::size_t b = 0; b < out_width_; ++b) {
        const double s = channel_scales_[b];
        for (std::size_t k = 0; k < N; ++k) out[b * N + k] = s * mode_gains_[k] * y[k];
      }
      return;
    case NonlinKind::collocation: {
      std::vector<double> phys(N), img(N);
      for (std::size_t j = 0; j < N; ++j)
        phys[j] = kernels::dot(transform_.data() + j * N, y, N);
      for (double& u : phys) u = profile_->F(u);
      for (std::size_t j = 0; j < N; ++j)
        img[j] = amplitude_ * kernels::dot(transform_.data() + j * N, phys.data(), N);
      for (std::size_t b = 0; b < out_width_; ++b) {
        const double s = channel_scales_[b];
        for (std::size_t k = 0; k < N; ++k) out[b * N + k] = s * img[k];
      }
      return;
    }
  }
}

void Nonlinearity::deriv_apply(const double* y, const double* v, double* out) const {
  const std::size_t N = n_modes_;
  switch (kind_) {
    case NonlinKind::zero:
      std::memset(out, 0, out_width_ * N * sizeof(double));
      return;
    case NonlinKind::linear:
      eval(v, out);  // the map is its own derivative
      return;
    case NonlinKind::collocation: {
      std::vector<double> uphys(N), vphys(N), img(N);
      for (std::size_t j = 0; j < N; ++j) {
        uphys[j] = kernels::dot(transform_.data() + j * N, y, N);
        vphys[j] = kernels::dot(transform_.data() + j * N, v, N);
      }
      for (std::size_t j = 0; j < N; ++j) vphys[j] *= profile_->F1(uphys[j]);
      for (std::size_t j = 0; j < N; ++j)
        img[j] = amplitude_ * kernels::dot(transform_.data() + j * N, vphys.data(), N);
      for (std::size_t b = 0; b < out_width_; ++b) {
        const double s = channel_scales_[b];
        for (std::size_t k = 0; k < N; ++k) out[b * N + k] = s * img[k];
      }
      return;
    }
  }
}

void Nonlinearity::deriv2_apply(const double* y, const double* v1, const double* v2,
                                double* out) const {
  const std::size_t N = n_modes_;
  if (kind_ != NonlinKind::collocation) {
    std::memset(out, 0, out_width_ * N * sizeof(double));
    return;
  }
  std::vector<double> uphys(N), prod(N), img(N), tmp(N);
  for (std::size_t j = 0; j < N; ++j) {
    uphys[j] = kernels::dot(transform_.data() + j * N, y, N);
    prod[j] = kernels::dot(transform_.data() + j * N, v1, N);
    tmp[j] = kernels::dot(transform_.data() + j * N, v2, N);
  }
  for (std::size_t j = 0; j < N; ++j) prod[j] *= tmp[j] * profile_->F2(uphys[j]);
  for (std::size_t j = 0; j < N; ++j)
    img[j] = amplitude_ * kernels::dot(transform_.data() + j * N, prod.data(), N);
  for (std::size_t b = 0; b < out_width_; ++b) {
    const double s = channel_scales_[b];
    for (std::size_t k = 0; k < N; ++k) out[b * N + k] = s * img[k];
  }
}

void Nonlinearity::deriv3_apply(const double* y, const double* v1, const double* v2,
                                const double* v3, double* out) const {
  const std::size_t N = n_modes_;
  if (kind_ != NonlinKind::collocation) {
    std::memset(out, 0, out_width_ * N * sizeof(double));
    return;
  }
  std::vector<double> uphys(N), prod(N), img(N), tmp(N);
  for (std::size_t j = 0; j < N; ++j) {
    uphys[j] = kernels::dot(transform_.data() + j * N, y, N);
    prod[j] = kernels::dot(transform_.data() + j * N, v1, N);
    tmp[j] = kernels::dot(transform_.data() + j * N, v2, N);
  }
  for (std::size_t j = 0; j < N; ++j) prod[j] *= tmp[j];
  for (std::size_t j = 0; j < N; ++j)
    tmp[j] = kernels::dot(transform_.data() + j * N, v3, N);
  for (std::size_t j = 0; j < N; ++j) prod[j] *= tmp[j] * profile_->F3(uphys[j]);
  for (std::size_t j = 0; j < N; ++j)
    img[j] = amplitude_ * kernels::dot(transform_.data() + j * N, prod.data(), N);
  for (std::size_t b = 0; b < out_width_; ++b) {
    const double s = channel_scales_[b];
    for (std::size_t k = 0; k < N; ++k) out[b * N + k] = s * img[k];
  }
}

Nonlinearity truncated_nonlinearity(const Nonlinearity& fg, const CutoffConfig& cfg) {
  cfg.validate();
  fg.require_drift_stationary();
  Nonlinearity g = fg;
  g.truncation_ = cfg;
  return g;
}

}  // namespace roughflow
