#include "sdde/survival.hpp"

#include "sdde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

namespace sdde {

SurvivalMap SurvivalMap::pointwise(std::string name, Scalar g, double bound, double lipschitz) {
    if (!g) throw ValidationError("survival map needs a callable");
    if (!(bound > 0.0) || !(lipschitz >= 0.0)) throw ValidationError("survival map constants invalid");
    SurvivalMap f;
    f.name_ = std::move(name);
    f.scalar_ = std::move(g);
    f.bound_ = bound;
    f.lipschitz_ = lipschitz;
    return f;
}

SurvivalMap SurvivalMap::nonlocal(std::string name, FieldFn fn, double bound, double lipschitz) {
    if (!fn) throw ValidationError("survival map needs a callable");
    if (!(bound > 0.0) || !(lipschitz >= 0.0)) throw ValidationError("survival map constants invalid");
    SurvivalMap f;
    f.name_ = std::move(name);
    f.field_ = std::move(fn);
    f.bound_ = bound;
    f.lipschitz_ = lipschitz;
    return f;
}

SurvivalMap SurvivalMap::unit() { return constant(1.0); }

SurvivalMap SurvivalMap::constant(double c) {
    if (!(c > 0.0)) throw ValidationError("constant survival map must be positive");
    std::ostringstream os;
    os << "constant(" << c << ")";
    return pointwise(os.str(), [c](double) { return c; }, c, 0.0);
}

SurvivalMap SurvivalMap::inverse_positive_part() {
    return pointwise(
        "inverse", [](double v) { return 1.0 / (1.0 + std::max(v, 0.0)); }, 1.0, 1.0);
}

SurvivalMap SurvivalMap::exponential_decay(double k) {
    if (!(k >= 0.0)) throw ValidationError("exponential survival rate must be >= 0");
    std::ostringstream os;
    os << "exponential(" << k << ")";
    return pointwise(os.str(), [k](double v) { return std::exp(-k * std::max(v, 0.0)); }, 1.0, k);
}

SurvivalMap SurvivalMap::inverse_mean() {
    return nonlocal(
        "inverse_mean",
        [](std::span<const double> in, std::span<double> out) {
            const double mean =
                std::accumulate(in.begin(), in.end(), 0.0) / static_cast<double>(in.size());
            std::fill(out.begin(), out.end(), 1.0 / (1.0 + std::max(mean, 0.0)));
        },
        1.0, 1.0);
}

void SurvivalMap::apply(std::span<const double> in, std::span<double> out) const {
    if (scalar_) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = scalar_(in[i]);
    } else {
        field_(in, out);
    }
}

std::optional<double> SurvivalMap::scalar(double v) const {
    if (!scalar_) return std::nullopt;
    return scalar_(v);
}

std::pair<double, double> SurvivalMap::on_constant(double v, std::size_t n) const {
    if (scalar_) {
        const double g = scalar_(v);
        return {g, g};
    }
    std::vector<double> in(n, v), out(n);
    field_(in, out);
    const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    return {*lo, *hi};
}

void check_survival_contract(const SurvivalMap& f, std::size_t n, std::uint64_t seed, int trials) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    std::uniform_real_distribution<double> bump(0.0, 5.0);
    std::vector<double> lo(n), hi(n), f_lo(n), f_hi(n);
    for (int trial = 0; trial < trials; ++trial) {
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = value(rng);
            hi[i] = lo[i] + bump(rng);
        }
        f.apply(lo, f_lo);
        f.apply(hi, f_hi);
        for (std::size_t i = 0; i < n; ++i) {
            const bool positive = f_lo[i] > 0.0 && f_hi[i] > 0.0;
            const bool bounded = f_lo[i] <= f.bound() && f_hi[i] <= f.bound();
            const bool finite = std::isfinite(f_lo[i]) && std::isfinite(f_hi[i]);
            if (!positive || !bounded || !finite) {
                throw ModelError("survival map '" + f.name() + "' violates 0 < f <= M");
            }
            if (f_lo[i] < f_hi[i]) {
                throw ModelError("survival map '" + f.name() + "' is not monotone non-increasing");
            }
        }
    }
}

}  // namespace sdde
