#include "ertk/kernels.hpp"
#include "kernels_internal.hpp"
#include "portable_math.hpp"

namespace ertk::kernels {

namespace {

void accum_scalar(double* acc, const double* tf, const double* len,
                  std::size_t n, double mu_bg, double mu) {
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += detail::smoothed_log_element(tf[i], len[i], mu_bg, mu);
  }
}

constexpr KernelSet kScalar{"scalar", accum_scalar};

}  // namespace

const KernelSet& scalar_kernels() { return kScalar; }

const KernelSet& scalar() { return kScalar; }

double smoothed_log_term(double tf, double len, double mu_bg, double mu) {
  return detail::smoothed_log_element(tf, len, mu_bg, mu);
}

double portable_log(double x) { return detail::portable_log_scalar(x); }

}  // namespace ertk::kernels
