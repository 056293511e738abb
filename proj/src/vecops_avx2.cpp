#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>

namespace cochain::vecops::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

double dot_avx2(const float* a, const float* b, size_t n) {
    __m256d acc_lo = _mm256_setzero_pd();
    __m256d acc_hi = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 va = _mm256_loadu_ps(a + i);
        __m256 vb = _mm256_loadu_ps(b + i);
        __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
        __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
        __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
        __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
        acc_lo = _mm256_add_pd(acc_lo, _mm256_mul_pd(a0, b0));
        acc_hi = _mm256_add_pd(acc_hi, _mm256_mul_pd(a1, b1));
    }
    double acc = hsum(_mm256_add_pd(acc_lo, acc_hi));
    for (; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double norm_sq_avx2(const float* a, size_t n) { return dot_avx2(a, a, n); }

}  // namespace cochain::vecops::detail

#endif
