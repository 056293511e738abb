#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>

namespace cochain::vecops::detail {

double dot_neon(const float* a, const float* b, size_t n) {
    float64x2_t acc_lo = vdupq_n_f64(0.0);
    float64x2_t acc_hi = vdupq_n_f64(0.0);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t va = vld1q_f32(a + i);
        float32x4_t vb = vld1q_f32(b + i);
        float64x2_t a0 = vcvt_f64_f32(vget_low_f32(va));
        float64x2_t a1 = vcvt_f64_f32(vget_high_f32(va));
        float64x2_t b0 = vcvt_f64_f32(vget_low_f32(vb));
        float64x2_t b1 = vcvt_f64_f32(vget_high_f32(vb));
        acc_lo = vfmaq_f64(acc_lo, a0, b0);
        acc_hi = vfmaq_f64(acc_hi, a1, b1);
    }
    double acc = vaddvq_f64(acc_lo) + vaddvq_f64(acc_hi);
    for (; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

double norm_sq_neon(const float* a, size_t n) { return dot_neon(a, a, n); }

}  // namespace cochain::vecops::detail

#endif
