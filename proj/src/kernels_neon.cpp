// NEON (AArch64) field kernels. Same contract as the AVX2 table: plain
// mul/add per lane, never vfma, so results match the scalar reference.

#include "sdde/kernels.hpp"

#include <arm_neon.h>

#include <limits>

namespace sdde::kernels {
namespace {

constexpr std::size_t kLanes = 2;

void trapezoid_accumulate_neon(const double* base, double half_step, const double* f0,
                               const double* f1, double* out, std::size_t n) {
    const float64x2_t h = vdupq_n_f64(half_step);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t s = vaddq_f64(vld1q_f64(f0 + i), vld1q_f64(f1 + i));
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(base + i), vmulq_f64(h, s)));
    }
    for (; i < n; ++i) out[i] = base[i] + half_step * (f0[i] + f1[i]);
}

void lerp_neon(const double* a, const double* b, double w, double* out, std::size_t n) {
    const double wa_s = 1.0 - w;
    const float64x2_t wa = vdupq_n_f64(wa_s);
    const float64x2_t wb = vdupq_n_f64(w);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t lhs = vmulq_f64(wa, vld1q_f64(a + i));
        const float64x2_t rhs = vmulq_f64(wb, vld1q_f64(b + i));
        vst1q_f64(out + i, vaddq_f64(lhs, rhs));
    }
    for (; i < n; ++i) out[i] = wa_s * a[i] + w * b[i];
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(a, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_neon(double alpha, const double* x, double* out, std::size_t n) {
    const float64x2_t a = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vmulq_f64(a, vld1q_f64(x + i)));
    for (; i < n; ++i) out[i] = alpha * x[i];
}

double max_abs_neon(const double* x, std::size_t n) {
    float64x2_t m = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) m = vmaxq_f64(m, vabsq_f64(vld1q_f64(x + i)));
    double r = vmaxvq_f64(m);
    for (; i < n; ++i) {
        const double v = x[i] < 0.0 ? -x[i] : x[i];
        r = v > r ? v : r;
    }
    return r;
}

double max_abs_diff_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t m = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        m = vmaxq_f64(m, vabsq_f64(vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i))));
    }
    double r = vmaxvq_f64(m);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        const double v = d < 0.0 ? -d : d;
        r = v > r ? v : r;
    }
    return r;
}

double min_value_neon(const double* x, std::size_t n) {
    float64x2_t m = vdupq_n_f64(std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) m = vminq_f64(m, vld1q_f64(x + i));
    double r = vminvq_f64(m);
    for (; i < n; ++i) r = x[i] < r ? x[i] : r;
    return r;
}

}  // namespace

const KernelTable& neon_table() {
    static const KernelTable table{
        trapezoid_accumulate_neon, lerp_neon,         axpy_neon,      scale_neon,
        max_abs_neon,              max_abs_diff_neon, min_value_neon,
    };
    return table;
}

}  // namespace sdde::kernels
