#pragma once

#include <cstddef>
#include <string>

namespace cochain::vecops {

// Dot product and squared norm over float data with double accumulation.
// A scalar reference kernel always exists; AVX2 (x86-64) and NEON (aarch64)
// variants are selected once at startup from CPU capabilities. Setting the
// environment variable COCHAIN_FORCE_SCALAR=1 pins the scalar kernel.

double dot(const float* a, const float* b, size_t n);
double norm_sq(const float* a, size_t n);

// Reference kernels, always compiled, used by the equivalence tests.
double dot_scalar(const float* a, const float* b, size_t n);
double norm_sq_scalar(const float* a, size_t n);

// Name of the kernel the dispatcher picked: "scalar", "avx2", or "neon".
const std::string& active_kernel();

}  // namespace cochain::vecops
