#include "sdde/kernels.hpp"

#include "sdde/errors.hpp"

#include <atomic>
#include <cassert>
#include <cstdlib>
#include <string>

namespace sdde::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(SDDE_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend detect_backend() {
    if (const char* forced = std::getenv("SDDE_SIMD")) {
        const std::string v{forced};
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && backend_supported(Backend::Avx2)) return Backend::Avx2;
        if (v == "neon" && backend_supported(Backend::Neon)) return Backend::Neon;
    }
    if (backend_supported(Backend::Avx2)) return Backend::Avx2;
    if (backend_supported(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

std::atomic<const KernelTable*>& active_slot() {
    static std::atomic<const KernelTable*> slot{&table_for(detect_backend())};
    return slot;
}

std::atomic<Backend>& active_kind() {
    static std::atomic<Backend> kind{detect_backend()};
    return kind;
}

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

}  // namespace

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
            return cpu_has_avx2();
        case Backend::Neon:
#if defined(SDDE_HAVE_NEON_TU)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() { return active_kind().load(std::memory_order_acquire); }

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "unknown";
}

const KernelTable& table_for(Backend b) {
    if (!backend_supported(b)) {
        throw ValidationError("SIMD backend '" + std::string(backend_name(b)) +
                              "' is not available on this machine");
    }
    switch (b) {
#if defined(SDDE_HAVE_AVX2_TU)
        case Backend::Avx2: return avx2_table();
#endif
#if defined(SDDE_HAVE_NEON_TU)
        case Backend::Neon: return neon_table();
#endif
        default: return scalar_table();
    }
}

void set_backend(Backend b) {
    const KernelTable& t = table_for(b);
    active_slot().store(&t, std::memory_order_release);
    active_kind().store(b, std::memory_order_release);
}

void trapezoid_accumulate(std::span<const double> base, double half_step,
                          std::span<const double> f0, std::span<const double> f1,
                          std::span<double> out) {
    assert(base.size() == out.size() && f0.size() == out.size() && f1.size() == out.size());
    active().trapezoid_accumulate(base.data(), half_step, f0.data(), f1.data(), out.data(),
                                  out.size());
}

void lerp(std::span<const double> a, std::span<const double> b, double w, std::span<double> out) {
    assert(a.size() == out.size() && b.size() == out.size());
    active().lerp(a.data(), b.data(), w, out.data(), out.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().axpy(alpha, x.data(), y.data(), y.size());
}

void scale(double alpha, std::span<const double> x, std::span<double> out) {
    assert(x.size() == out.size());
    active().scale(alpha, x.data(), out.data(), out.size());
}

double max_abs(std::span<const double> x) { return active().max_abs(x.data(), x.size()); }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().max_abs_diff(a.data(), b.data(), a.size());
}

double min_value(std::span<const double> x) { return active().min_value(x.data(), x.size()); }

}  // namespace sdde::kernels
