#pragma once

#include <cstddef>

namespace roughflow::kernels {

// Variant dispatch table shared by the scalar and AVX2 translation units.
struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  double (*normsq)(const double*, std::size_t);
  double (*diff_normsq)(const double*, const double*, std::size_t);
  double (*weighted_normsq)(const double*, const double*, std::size_t);
  double (*hat_diff_weighted_normsq)(const double*, const double*,
                                     const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  void (*hadamard)(const double*, const double*, double*, std::size_t);
  double (*maxabs)(const double*, std::size_t);
  double (*maxabs_diff)(const double*, const double*, std::size_t);
  double (*chen_residual)(const double*, const double*, const double*,
                          const double*, const double*, std::size_t);
};

namespace avx2_impl {
const Ops& ops();
}

}  // namespace roughflow::kernels
