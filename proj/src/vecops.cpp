#include "cochain/vecops.hpp"

#include <cstdlib>

namespace cochain::vecops {

namespace detail {
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const float* a, const float* b, size_t n);
double norm_sq_avx2(const float* a, size_t n);
#endif
#if defined(__aarch64__)
double dot_neon(const float* a, const float* b, size_t n);
double norm_sq_neon(const float* a, size_t n);
#endif
}  // namespace detail

namespace {

using DotFn = double (*)(const float*, const float*, size_t);
using NormFn = double (*)(const float*, size_t);

struct Dispatch {
    DotFn dot = &dot_scalar;
    NormFn norm_sq = &norm_sq_scalar;
    std::string name = "scalar";
};

Dispatch pick_kernels() {
    Dispatch d;
    const char* force = std::getenv("COCHAIN_FORCE_SCALAR");
    if (force != nullptr && force[0] != '\0' && force[0] != '0') return d;
#if defined(__x86_64__) || defined(_M_X64)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2")) {
        d.dot = &detail::dot_avx2;
        d.norm_sq = &detail::norm_sq_avx2;
        d.name = "avx2";
    }
#elif defined(__aarch64__)
    d.dot = &detail::dot_neon;
    d.norm_sq = &detail::norm_sq_neon;
    d.name = "neon";
#endif
    return d;
}

const Dispatch& kernels() {
    static const Dispatch d = pick_kernels();
    return d;
}

}  // namespace

double dot(const float* a, const float* b, size_t n) { return kernels().dot(a, b, n); }

double norm_sq(const float* a, size_t n) { return kernels().norm_sq(a, n); }

const std::string& active_kernel() { return kernels().name; }

}  // namespace cochain::vecops
