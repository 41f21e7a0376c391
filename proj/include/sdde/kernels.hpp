#pragma once

// Field arithmetic kernels with a scalar reference and SIMD variants.
//
// Every kernel here is either elementwise (each lane computes exactly the
// scalar expression, same operation order, no contraction) or a max
// reduction, so all backends return bit-identical results. Trajectories stay
// deterministic regardless of which backend the dispatcher picks.

#include <cstddef>
#include <span>
#include <string_view>

namespace sdde::kernels {

enum class Backend { Scalar, Avx2, Neon };

/// Function table for one backend. Inputs must be finite and equally sized.
struct KernelTable {
    // out[i] = base[i] + half_step * (f0[i] + f1[i])
    void (*trapezoid_accumulate)(const double* base, double half_step, const double* f0,
                                 const double* f1, double* out, std::size_t n);
    // out[i] = (1 - w) * a[i] + w * b[i]
    void (*lerp)(const double* a, const double* b, double w, double* out, std::size_t n);
    // y[i] = y[i] + alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out[i] = alpha * x[i]
    void (*scale)(double alpha, const double* x, double* out, std::size_t n);
    double (*max_abs)(const double* x, std::size_t n);
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
    double (*min_value)(const double* x, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(SDDE_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif
#if defined(SDDE_HAVE_NEON_TU)
const KernelTable& neon_table();
#endif

[[nodiscard]] bool backend_supported(Backend b);
[[nodiscard]] Backend active_backend();
[[nodiscard]] std::string_view backend_name(Backend b);

/// Force a backend. Throws ValidationError if the CPU or build lacks it.
void set_backend(Backend b);

/// Table for an explicit backend (used by the equivalence tests).
const KernelTable& table_for(Backend b);

void trapezoid_accumulate(std::span<const double> base, double half_step,
                          std::span<const double> f0, std::span<const double> f1,
                          std::span<double> out);
void lerp(std::span<const double> a, std::span<const double> b, double w, std::span<double> out);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<const double> x, std::span<double> out);
[[nodiscard]] double max_abs(std::span<const double> x);
[[nodiscard]] double max_abs_diff(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double min_value(std::span<const double> x);

}  // namespace sdde::kernels
