// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma and is only entered after a CPUID check in the dispatcher, so
// no other TU needs those flags.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "kernels_ops.hpp"

namespace roughflow::kernels {
namespace avx2_impl {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double normsq(const double* x, std::size_t n) { return dot(x, x, n); }

double diff_normsq(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double r = a[i] - b[i];
    s += r * r;
  }
  return s;
}

double weighted_normsq(const double* x, const double* w, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xi = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), xi), xi, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i] * x[i];
  return s;
}

double hat_diff_weighted_normsq(const double* a, const double* b,
                                const double* f, const double* w,
                                std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_fnmadd_pd(_mm256_loadu_pd(f + i),
                                       _mm256_loadu_pd(b + i),
                                       _mm256_loadu_pd(a + i));
    acc = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w + i), r), r, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double r = a[i] - f[i] * b[i];
    s += w[i] * r * r;
  }
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  // mul+add rather than fma so the result is bitwise equal to the scalar
  // reference (element-wise maps are equivalence-tested exactly).
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i),
                                          _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) x[i] *= alpha;
}

void hadamard(const double* x, const double* f, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(f + i),
                                            _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = f[i] * x[i];
}

inline __m256d vabs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

double maxabs(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, vabs(_mm256_loadu_pd(x + i)));
  double m = hmax(acc);
  for (; i < n; ++i) m = m > std::abs(x[i]) ? m : std::abs(x[i]);
  return m;
}

double maxabs_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_max_pd(
        acc, vabs(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
  double m = hmax(acc);
  for (; i < n; ++i) {
    const double r = std::abs(a[i] - b[i]);
    m = m > r ? m : r;
  }
  return m;
}

double chen_residual(const double* w2ji, const double* w2jk,
                     const double* w2ki, const double* dwki,
                     const double* dwjk, std::size_t d) {
  if (d == 2) {
    // The whole 2x2 block is one vector: rows (a=0, a=1) laid out flat.
    const __m256d block = _mm256_sub_pd(
        _mm256_sub_pd(_mm256_loadu_pd(w2ji), _mm256_loadu_pd(w2jk)),
        _mm256_loadu_pd(w2ki));
    const __m256d ki = _mm256_set_pd(dwki[1], dwki[1], dwki[0], dwki[0]);
    const __m256d jk = _mm256_set_pd(dwjk[1], dwjk[0], dwjk[1], dwjk[0]);
    return hmax(vabs(_mm256_fnmadd_pd(ki, jk, block)));
  }
  double m = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    const __m256d da = _mm256_set1_pd(dwki[a]);
    const std::size_t row = a * d;
    __m256d acc = _mm256_setzero_pd();
    std::size_t b = 0;
    for (; b + 4 <= d; b += 4) {
      const __m256d blk = _mm256_sub_pd(
          _mm256_sub_pd(_mm256_loadu_pd(w2ji + row + b),
                        _mm256_loadu_pd(w2jk + row + b)),
          _mm256_loadu_pd(w2ki + row + b));
      acc = _mm256_max_pd(acc, vabs(_mm256_fnmadd_pd(da, _mm256_loadu_pd(dwjk + b), blk)));
    }
    m = m > hmax(acc) ? m : hmax(acc);
    for (; b < d; ++b) {
      const double r = std::abs(w2ji[row + b] - w2jk[row + b] - w2ki[row + b] -
                                dwki[a] * dwjk[b]);
      m = m > r ? m : r;
    }
  }
  return m;
}

}  // namespace

const Ops& ops() {
  static const Ops table = {
      dot,
      normsq,
      diff_normsq,
      weighted_normsq,
      hat_diff_weighted_normsq,
      axpy,
      scale,
      hadamard,
      maxabs,
      maxabs_diff,
      chen_residual,
  };
  return table;
}

}  // namespace avx2_impl
}  // namespace roughflow::kernels
