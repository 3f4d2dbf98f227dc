#pragma once

#include "ertk/kernels.hpp"

// Registry entries for the individual kernel translation units. Only
// dispatch.cpp and the kernel sources themselves should include this.

namespace ertk::kernels {

const KernelSet& scalar_kernels();

#if defined(__x86_64__) || defined(_M_X64)
const KernelSet& avx2_kernels();
#endif

#if defined(__aarch64__)
const KernelSet& neon_kernels();
#endif

}  // namespace ertk::kernels
