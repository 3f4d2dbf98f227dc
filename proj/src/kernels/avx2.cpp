// AVX2 + FMA variant of smoothed_log_accum. Bit-identical to the scalar
// kernel: same decomposition, same polynomial, same operation order, with
// FMA used exactly where the scalar path uses std::fma. Lanes whose ratio is
// zero, subnormal, or non-finite are recomputed through the scalar element
// function, which handles those cases explicitly.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cfloat>

#include "ertk/kernels.hpp"
#include "kernels_internal.hpp"
#include "portable_math.hpp"

namespace ertk::kernels {

namespace {

// Vector translation of detail::log_core plus the exponent/mantissa split.
// Inputs must be positive, normal, finite; the caller screens out the rest.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i e64 =
      _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1022));
  // Exponents fit in int32, so pack the low dwords of each lane and widen.
  const __m256i pack = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
  __m256d ed = _mm256_cvtepi32_pd(
      _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(e64, pack)));
  const __m256d m = _mm256_castsi256_pd(_mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
      _mm256_set1_epi64x(0x3FE0000000000000LL)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d below =
      _mm256_cmp_pd(m, _mm256_set1_pd(detail::kSqrtHalf), _CMP_LT_OQ);
  ed = _mm256_sub_pd(ed, _mm256_and_pd(below, one));
  // Both branch results are exact, so computing and blending them preserves
  // bit-identity with the scalar branch.
  const __m256d xr =
      _mm256_blendv_pd(_mm256_sub_pd(m, one),
                       _mm256_sub_pd(_mm256_add_pd(m, m), one), below);

  const __m256d z = _mm256_mul_pd(xr, xr);
  __m256d p = _mm256_set1_pd(detail::kLogP[0]);
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(detail::kLogP[1]));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(detail::kLogP[2]));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(detail::kLogP[3]));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(detail::kLogP[4]));
  p = _mm256_fmadd_pd(p, xr, _mm256_set1_pd(detail::kLogP[5]));
  __m256d q = _mm256_add_pd(xr, _mm256_set1_pd(detail::kLogQ[0]));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(detail::kLogQ[1]));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(detail::kLogQ[2]));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(detail::kLogQ[3]));
  q = _mm256_fmadd_pd(q, xr, _mm256_set1_pd(detail::kLogQ[4]));
  __m256d y = _mm256_mul_pd(xr, _mm256_div_pd(_mm256_mul_pd(z, p), q));
  y = _mm256_sub_pd(y, _mm256_mul_pd(ed, _mm256_set1_pd(detail::kLn2Lo)));
  y = _mm256_sub_pd(y, _mm256_mul_pd(_mm256_set1_pd(0.5), z));
  const __m256d r = _mm256_add_pd(xr, y);
  return _mm256_add_pd(r, _mm256_mul_pd(ed, _mm256_set1_pd(detail::kLn2Hi)));
}

void accum_avx2(double* acc, const double* tf, const double* len,
                std::size_t n, double mu_bg, double mu) {
  const __m256d vbg = _mm256_set1_pd(mu_bg);
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vmin = _mm256_set1_pd(DBL_MIN);
  const __m256d vmax = _mm256_set1_pd(DBL_MAX);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d ratio =
        _mm256_div_pd(_mm256_add_pd(_mm256_loadu_pd(tf + i), vbg),
                      _mm256_add_pd(_mm256_loadu_pd(len + i), vmu));
    const __m256d ok = _mm256_and_pd(_mm256_cmp_pd(ratio, vmin, _CMP_GE_OQ),
                                     _mm256_cmp_pd(ratio, vmax, _CMP_LE_OQ));
    __m256d lg;
    if (_mm256_movemask_pd(ok) == 0xF) {
      lg = log_pd(ratio);
    } else {
      double rv[4];
      double out[4];
      _mm256_storeu_pd(rv, ratio);
      for (int k = 0; k < 4; ++k) out[k] = detail::portable_log_scalar(rv[k]);
      lg = _mm256_loadu_pd(out);
    }
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), lg));
  }
  for (; i < n; ++i) {
    acc[i] += detail::smoothed_log_element(tf[i], len[i], mu_bg, mu);
  }
}

constexpr KernelSet kAvx2{"avx2", accum_avx2};

}  // namespace

const KernelSet& avx2_kernels() { return kAvx2; }

}  // namespace ertk::kernels

#endif  // x86_64
