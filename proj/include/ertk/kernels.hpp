#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace ertk::kernels {

// Batched Dirichlet-smoothed log-likelihood accumulation, the inner loop of
// group scoring:
//
//   acc[i] += log((tf[i] + mu_bg) / (len[i] + mu))      for i in [0, n)
//
// where mu_bg = mu * p_background(term). All variants (scalar, AVX2, NEON)
// produce bit-identical results: they share one polynomial log implementation
// evaluated with the same operation order, so kernel choice never changes a
// score. Lanes holding non-finite or subnormal ratios fall back to the scalar
// element path.
using SmoothedLogAccumFn = void (*)(double* acc, const double* tf, const double* len,
                                    std::size_t n, double mu_bg, double mu);

struct KernelSet {
  const char* name;
  SmoothedLogAccumFn smoothed_log_accum;
};

// Portable reference kernels. Always available.
const KernelSet& scalar();

// Kernels selected for this process: best supported variant, or whatever
// select() / the ERTK_KERNEL environment variable picked.
const KernelSet& active();

// Selects a variant by name ("auto", "scalar", "avx2", "neon"). Returns false
// if the variant is unknown or unsupported on this host; the active set is
// then left unchanged.
bool select(std::string_view name);

// Every kernel set usable on this host (scalar first).
std::vector<const KernelSet*> supported();

// Single-element version of the kernel body. Exactly the operation sequence
// the vector kernels apply per lane, so score code that handles one group at
// a time matches the batched path bit for bit.
double smoothed_log_term(double tf, double len, double mu_bg, double mu);

// Natural log via the shared polynomial; accurate to a few ulp of std::log
// and identical across platforms and SIMD variants.
double portable_log(double x);

}  // namespace ertk::kernels
