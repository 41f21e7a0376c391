#include "sdde/kernels.hpp"

#include <limits>

namespace sdde::kernels {
namespace {

void trapezoid_accumulate_scalar(const double* base, double half_step, const double* f0,
                                 const double* f1, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = base[i] + half_step * (f0[i] + f1[i]);
    }
}

void lerp_scalar(const double* a, const double* b, double w, double* out, std::size_t n) {
    const double wa = 1.0 - w;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = wa * a[i] + w * b[i];
    }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = y[i] + alpha * x[i];
    }
}

void scale_scalar(double alpha, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = alpha * x[i];
    }
}

double max_abs_scalar(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] < 0.0 ? -x[i] : x[i];
        m = v > m ? v : m;
    }
    return m;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        const double v = d < 0.0 ? -d : d;
        m = v > m ? v : m;
    }
    return m;
}

double min_value_scalar(const double* x, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        m = x[i] < m ? x[i] : m;
    }
    return m;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        trapezoid_accumulate_scalar, lerp_scalar,         axpy_scalar,       scale_scalar,
        max_abs_scalar,              max_abs_diff_scalar, min_value_scalar,
    };
    return table;
}

}  // namespace sdde::kernels
