#pragma once

// Shared log evaluation used by every smoothed_log_accum variant. The scalar
// and SIMD kernels must execute the same operations in the same order so that
// their outputs are bit-identical; any change here has to be mirrored in
// avx2.cpp and neon.cpp.

#include <bit>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ertk::kernels::detail {

// Rational approximation of log(1+u) on [sqrt(1/2)-1, sqrt(2)-1], after
// Moshier's cephes library. Peak error is a couple of ulp, far inside the
// tolerances any caller needs.
inline constexpr double kLogP[6] = {
    1.01875663804580931796e-4, 4.97494994976747001425e-1,
    4.70579119878881725854e0,  1.44989225341610930846e1,
    1.79368678507819816313e1,  7.70838733755885391666e0,
};
inline constexpr double kLogQ[5] = {
    1.12873587189167450590e1, 4.52279145837532221105e1,
    8.29875266912776603211e1, 7.11544750618563894466e1,
    2.31251620126765340583e1,
};
inline constexpr double kSqrtHalf = 0.70710678118654752440;
// ln(2) split into a short-mantissa head plus a correction term, so that
// e * kLn2Hi is exact for every possible exponent e.
inline constexpr double kLn2Hi = 0.693359375;
inline constexpr double kLn2Lo = 2.121944400546905827679e-4;

// Core evaluation for a positive normal input decomposed as m * 2^ed with
// m in [0.5, 1). Polynomial steps use fused multiply-add; the exponent
// reconstruction keeps separate multiply and add on purpose, because the
// vector kernels do the same and the results must match bitwise.
inline double log_core(double m, double ed) {
  double xr;
  if (m < kSqrtHalf) {
    ed -= 1.0;
    xr = (m + m) - 1.0;
  } else {
    xr = m - 1.0;
  }
  const double z = xr * xr;
  double p = kLogP[0];
  p = std::fma(p, xr, kLogP[1]);
  p = std::fma(p, xr, kLogP[2]);
  p = std::fma(p, xr, kLogP[3]);
  p = std::fma(p, xr, kLogP[4]);
  p = std::fma(p, xr, kLogP[5]);
  double q = xr + kLogQ[0];
  q = std::fma(q, xr, kLogQ[1]);
  q = std::fma(q, xr, kLogQ[2]);
  q = std::fma(q, xr, kLogQ[3]);
  q = std::fma(q, xr, kLogQ[4]);
  double y = xr * ((z * p) / q);
  y = y - ed * kLn2Lo;
  y = y - 0.5 * z;
  const double r = xr + y;
  return r + ed * kLn2Hi;
}

inline double portable_log_scalar(double x) {
  if (std::isnan(x)) return x;
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (x < 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(x)) return x;
  int scale = 0;
  if (x < DBL_MIN) {
    // Subnormal: renormalize so the exponent/mantissa split below works.
    x *= 0x1p54;
    scale = -54;
  }
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const int e = static_cast<int>(bits >> 52) - 1022 + scale;
  const double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) |
                                         0x3FE0000000000000ULL);
  return log_core(m, static_cast<double>(e));
}

// One lane of smoothed_log_accum without the accumulate. The vector kernels
// apply exactly these operations per lane.
inline double smoothed_log_element(double tf, double len, double mu_bg,
                                   double mu) {
  const double num = tf + mu_bg;
  const double den = len + mu;
  return portable_log_scalar(num / den);
}

}  // namespace ertk::kernels::detail
