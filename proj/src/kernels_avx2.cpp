// AVX2 field kernels. Compiled with -mavx2 only; the dispatcher checks the
// CPU before handing out this table. No FMA: lanes must round exactly like
// the scalar reference.

#include "sdde/kernels.hpp"

#include <immintrin.h>

#include <limits>

namespace sdde::kernels {
namespace {

constexpr std::size_t kLanes = 4;

inline __m256d abs_pd(__m256d v) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    return _mm256_andnot_pd(sign_mask, v);
}

inline double hmax(__m256d v) {
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, v);
    double m = lanes[0];
    for (std::size_t i = 1; i < kLanes; ++i) m = lanes[i] > m ? lanes[i] : m;
    return m;
}

inline double hmin(__m256d v) {
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, v);
    double m = lanes[0];
    for (std::size_t i = 1; i < kLanes; ++i) m = lanes[i] < m ? lanes[i] : m;
    return m;
}

void trapezoid_accumulate_avx2(const double* base, double half_step, const double* f0,
                               const double* f1, double* out, std::size_t n) {
    const __m256d h = _mm256_set1_pd(half_step);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d s = _mm256_add_pd(_mm256_loadu_pd(f0 + i), _mm256_loadu_pd(f1 + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(base + i), _mm256_mul_pd(h, s)));
    }
    for (; i < n; ++i) out[i] = base[i] + half_step * (f0[i] + f1[i]);
}

void lerp_avx2(const double* a, const double* b, double w, double* out, std::size_t n) {
    const double wa_s = 1.0 - w;
    const __m256d wa = _mm256_set1_pd(wa_s);
    const __m256d wb = _mm256_set1_pd(w);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d lhs = _mm256_mul_pd(wa, _mm256_loadu_pd(a + i));
        const __m256d rhs = _mm256_mul_pd(wb, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(lhs, rhs));
    }
    for (; i < n; ++i) out[i] = wa_s * a[i] + w * b[i];
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(a, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_avx2(double alpha, const double* x, double* out, std::size_t n) {
    const __m256d a = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(a, _mm256_loadu_pd(x + i)));
    }
    for (; i < n; ++i) out[i] = alpha * x[i];
}

double max_abs_avx2(const double* x, std::size_t n) {
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        m = _mm256_max_pd(m, abs_pd(_mm256_loadu_pd(x + i)));
    }
    double r = hmax(m);
    for (; i < n; ++i) {
        const double v = x[i] < 0.0 ? -x[i] : x[i];
        r = v > r ? v : r;
    }
    return r;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d m = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        m = _mm256_max_pd(m, abs_pd(d));
    }
    double r = hmax(m);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        const double v = d < 0.0 ? -d : d;
        r = v > r ? v : r;
    }
    return r;
}

double min_value_avx2(const double* x, std::size_t n) {
    __m256d m = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        m = _mm256_min_pd(m, _mm256_loadu_pd(x + i));
    }
    double r = hmin(m);
    for (; i < n; ++i) r = x[i] < r ? x[i] : r;
    return r;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{
        trapezoid_accumulate_avx2, lerp_avx2,         axpy_avx2,      scale_avx2,
        max_abs_avx2,              max_abs_diff_avx2, min_value_avx2,
    };
    return table;
}

}  // namespace sdde::kernels
