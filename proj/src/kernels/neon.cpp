// NEON variant of smoothed_log_accum for aarch64. A two-lane transliteration
// of the AVX2 kernel; see avx2.cpp and portable_math.hpp for the contract.
// aarch64 converts int64 lanes to double directly, so no dword packing is
// needed here.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cfloat>

#include "ertk/kernels.hpp"
#include "kernels_internal.hpp"
#include "portable_math.hpp"

namespace ertk::kernels {

namespace {

inline float64x2_t log_f64(float64x2_t x) {
  const uint64x2_t bits = vreinterpretq_u64_f64(x);
  const int64x2_t e64 = vsubq_s64(
      vreinterpretq_s64_u64(vshrq_n_u64(bits, 52)), vdupq_n_s64(1022));
  float64x2_t ed = vcvtq_f64_s64(e64);
  const float64x2_t m = vreinterpretq_f64_u64(
      vorrq_u64(vandq_u64(bits, vdupq_n_u64(0x000FFFFFFFFFFFFFULL)),
                vdupq_n_u64(0x3FE0000000000000ULL)));

  const float64x2_t one = vdupq_n_f64(1.0);
  const uint64x2_t below = vcltq_f64(m, vdupq_n_f64(detail::kSqrtHalf));
  ed = vsubq_f64(
      ed, vreinterpretq_f64_u64(vandq_u64(below, vreinterpretq_u64_f64(one))));
  const float64x2_t xr =
      vbslq_f64(below, vsubq_f64(vaddq_f64(m, m), one), vsubq_f64(m, one));

  const float64x2_t z = vmulq_f64(xr, xr);
  float64x2_t p = vdupq_n_f64(detail::kLogP[0]);
  p = vfmaq_f64(vdupq_n_f64(detail::kLogP[1]), p, xr);
  p = vfmaq_f64(vdupq_n_f64(detail::kLogP[2]), p, xr);
  p = vfmaq_f64(vdupq_n_f64(detail::kLogP[3]), p, xr);
  p = vfmaq_f64(vdupq_n_f64(detail::kLogP[4]), p, xr);
  p = vfmaq_f64(vdupq_n_f64(detail::kLogP[5]), p, xr);
  float64x2_t q = vaddq_f64(xr, vdupq_n_f64(detail::kLogQ[0]));
  q = vfmaq_f64(vdupq_n_f64(detail::kLogQ[1]), q, xr);
  q = vfmaq_f64(vdupq_n_f64(detail::kLogQ[2]), q, xr);
  q = vfmaq_f64(vdupq_n_f64(detail::kLogQ[3]), q, xr);
  q = vfmaq_f64(vdupq_n_f64(detail::kLogQ[4]), q, xr);
  float64x2_t y = vmulq_f64(xr, vdivq_f64(vmulq_f64(z, p), q));
  y = vsubq_f64(y, vmulq_f64(ed, vdupq_n_f64(detail::kLn2Lo)));
  y = vsubq_f64(y, vmulq_f64(vdupq_n_f64(0.5), z));
  const float64x2_t r = vaddq_f64(xr, y);
  return vaddq_f64(r, vmulq_f64(ed, vdupq_n_f64(detail::kLn2Hi)));
}

void accum_neon(double* acc, const double* tf, const double* len,
                std::size_t n, double mu_bg, double mu) {
  const float64x2_t vbg = vdupq_n_f64(mu_bg);
  const float64x2_t vmu = vdupq_n_f64(mu);
  const float64x2_t vmin = vdupq_n_f64(DBL_MIN);
  const float64x2_t vmax = vdupq_n_f64(DBL_MAX);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t ratio = vdivq_f64(vaddq_f64(vld1q_f64(tf + i), vbg),
                                        vaddq_f64(vld1q_f64(len + i), vmu));
    const uint64x2_t ok =
        vandq_u64(vcgeq_f64(ratio, vmin), vcleq_f64(ratio, vmax));
    float64x2_t lg;
    if ((vgetq_lane_u64(ok, 0) & vgetq_lane_u64(ok, 1)) == ~0ULL) {
      lg = log_f64(ratio);
    } else {
      double rv[2];
      double out[2];
      vst1q_f64(rv, ratio);
      out[0] = detail::portable_log_scalar(rv[0]);
      out[1] = detail::portable_log_scalar(rv[1]);
      lg = vld1q_f64(out);
    }
    vst1q_f64(acc + i, vaddq_f64(vld1q_f64(acc + i), lg));
  }
  for (; i < n; ++i) {
    acc[i] += detail::smoothed_log_element(tf[i], len[i], mu_bg, mu);
  }
}

constexpr KernelSet kNeon{"neon", accum_neon};

}  // namespace

const KernelSet& neon_kernels() { return kNeon; }

}  // namespace ertk::kernels

#endif  // aarch64
