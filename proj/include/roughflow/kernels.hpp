#pragma once

#include <cstddef>

namespace roughflow::kernels {

// Data-parallel inner loops used by the norm scans, the Chen-defect scan and
// the mode-wise semigroup application. Every kernel has a scalar reference
// implementation and (on x86-64) an AVX2+FMA variant; the active variant is
// chosen once at startup from CPUID and can be overridden for testing. The
// two variants are equivalence-tested against each other: element-wise maps
// must agree bitwise, reductions to 1e-13 relative (lane reassociation).

enum class Backend { scalar, avx2 };

Backend active_backend();
bool avx2_available();            // compiled in and supported by this CPU
void set_backend(Backend b);      // throws InvalidConfig when unavailable
void reset_backend();             // back to the best available variant

// sum_i x_i y_i
double dot(const double* x, const double* y, std::size_t n);
// sum_i x_i^2
double normsq(const double* x, std::size_t n);
// sum_i (a_i - b_i)^2
double diff_normsq(const double* a, const double* b, std::size_t n);
// sum_i w_i x_i^2                      (interpolation-space norms)
double weighted_normsq(const double* x, const double* w, std::size_t n);
// sum_i w_i (a_i - f_i b_i)^2          (twisted increment a - S b, mode-wise)
double hat_diff_weighted_normsq(const double* a, const double* b,
                                const double* f, const double* w,
                                std::size_t n);
// y_i += alpha x_i
void axpy(double alpha, const double* x, double* y, std::size_t n);
// x_i *= alpha
void scale(double alpha, double* x, std::size_t n);
// out_i = f_i x_i                      (semigroup factors applied to modes)
void hadamard(const double* x, const double* f, double* out, std::size_t n);
// max_i |x_i|                          (block norms on second-level increments)
double maxabs(const double* x, std::size_t n);
// max_i |a_i - b_i|
double maxabs_diff(const double* a, const double* b, std::size_t n);
// max-abs entry of  w2ji - w2jk - w2ki - dwki (x) dwjk   over a d x d block
double chen_residual(const double* w2ji, const double* w2jk,
                     const double* w2ki, const double* dwki,
                     const double* dwjk, std::size_t d);

}  // namespace roughflow::kernels
