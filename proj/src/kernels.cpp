#include "roughflow/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "roughflow/errors.hpp"
#include "kernels_ops.hpp"

namespace roughflow::kernels {

namespace scalar_impl {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double normsq(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

double diff_normsq(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = a[i] - b[i];
    s += r * r;
  }
  return s;
}

double weighted_normsq(const double* x, const double* w, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

double hat_diff_weighted_normsq(const double* a, const double* b,
                                const double* f, const double* w,
                                std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = a[i] - f[i] * b[i];
    s += w[i] * r * r;
  }
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void hadamard(const double* x, const double* f, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = f[i] * x[i];
}

double maxabs(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
  return m;
}

double maxabs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double chen_residual(const double* w2ji, const double* w2jk,
                     const double* w2ki, const double* dwki,
                     const double* dwjk, std::size_t d) {
  double m = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    const double da = dwki[a];
    const std::size_t row = a * d;
    for (std::size_t b = 0; b < d; ++b) {
      const double r = w2ji[row + b] - w2jk[row + b] - w2ki[row + b] - da * dwjk[b];
      m = std::max(m, std::abs(r));
    }
  }
  return m;
}

}  // namespace scalar_impl

static constexpr Ops kScalarOps = {
    scalar_impl::dot,
    scalar_impl::normsq,
    scalar_impl::diff_normsq,
    scalar_impl::weighted_normsq,
    scalar_impl::hat_diff_weighted_normsq,
    scalar_impl::axpy,
    scalar_impl::scale,
    scalar_impl::hadamard,
    scalar_impl::maxabs,
    scalar_impl::maxabs_diff,
    scalar_impl::chen_residual,
};

#ifdef ROUGHFLOW_BUILD_AVX2
static bool cpu_has_avx2() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }
#else
static bool cpu_has_avx2() { return false; }
#endif

namespace {

Backend pick_default() { return cpu_has_avx2() ? Backend::avx2 : Backend::scalar; }

Backend g_backend = pick_default();

const Ops& active_ops() {
#ifdef ROUGHFLOW_BUILD_AVX2
  if (g_backend == Backend::avx2) return avx2_impl::ops();
#endif
  return kScalarOps;
}

}  // namespace

Backend active_backend() { return g_backend; }

bool avx2_available() { return cpu_has_avx2(); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && !avx2_available())
    throw InvalidConfig("kernels: AVX2 backend not available on this host");
  g_backend = b;
}

void reset_backend() { g_backend = pick_default(); }

double dot(const double* x, const double* y, std::size_t n) {
  return active_ops().dot(x, y, n);
}
double normsq(const double* x, std::size_t n) { return active_ops().normsq(x, n); }
double diff_normsq(const double* a, const double* b, std::size_t n) {
  return active_ops().diff_normsq(a, b, n);
}
double weighted_normsq(const double* x, const double* w, std::size_t n) {
  return active_ops().weighted_normsq(x, w, n);
}
double hat_diff_weighted_normsq(const double* a, const double* b,
                                const double* f, const double* w,
                                std::size_t n) {
  return active_ops().hat_diff_weighted_normsq(a, b, f, w, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active_ops().axpy(alpha, x, y, n);
}
void scale(double alpha, double* x, std::size_t n) { active_ops().scale(alpha, x, n); }
void hadamard(const double* x, const double* f, double* out, std::size_t n) {
  active_ops().hadamard(x, f, out, n);
}
double maxabs(const double* x, std::size_t n) { return active_ops().maxabs(x, n); }
double maxabs_diff(const double* a, const double* b, std::size_t n) {
  return active_ops().maxabs_diff(a, b, n);
}
double chen_residual(const double* w2ji, const double* w2jk,
                     const double* w2ki, const double* dwki,
                     const double* dwjk, std::size_t d) {
  return active_ops().chen_residual(w2ji, w2jk, w2ki, dwki, dwjk, d);
}

}  // namespace roughflow::kernels
