#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace sdde {

/// The survival map f: C(Omega) -> C(Omega). Strictly positive, bounded by
/// bound(), Lipschitz with lipschitz(), monotone non-increasing.
///
/// Pointwise maps (f(phi)(x) = g(phi(x))) also expose g, which the forest
/// model needs for its scalar-argument ratio f(A(t,x)) / f(A(t - tau, x)).
class SurvivalMap {
public:
    using Scalar = std::function<double(double)>;
    using FieldFn = std::function<void(std::span<const double> in, std::span<double> out)>;

    static SurvivalMap pointwise(std::string name, Scalar g, double bound, double lipschitz);
    static SurvivalMap nonlocal(std::string name, FieldFn fn, double bound, double lipschitz);

    /// f == 1.
    static SurvivalMap unit();
    /// f == c, c > 0.
    static SurvivalMap constant(double c);
    /// f(phi)(x) = 1 / (1 + max(phi(x), 0)); bound 1, modulus 1.
    static SurvivalMap inverse_positive_part();
    /// f(phi)(x) = exp(-k max(phi(x), 0)); bound 1, modulus k.
    static SurvivalMap exponential_decay(double k);
    /// f(phi)(x) = 1 / (1 + max(mean(phi), 0)): a genuinely field-valued map.
    static SurvivalMap inverse_mean();

    void apply(std::span<const double> in, std::span<double> out) const;
    /// g(v) for pointwise maps; nullopt otherwise.
    [[nodiscard]] std::optional<double> scalar(double v) const;
    /// f applied to the constant field v, evaluated at every point: returns (min, max) over x.
    [[nodiscard]] std::pair<double, double> on_constant(double v, std::size_t n) const;

    [[nodiscard]] bool is_pointwise() const noexcept { return static_cast<bool>(scalar_); }
    [[nodiscard]] double bound() const noexcept { return bound_; }
    [[nodiscard]] double lipschitz() const noexcept { return lipschitz_; }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
    Scalar scalar_;
    FieldFn field_;
    double bound_ = 1.0;
    double lipschitz_ = 0.0;
};

/// Randomized contract check run when a model is registered: 0 < f <= bound
/// and phi <= phi_hat pointwise implies f(phi) >= f(phi_hat). Throws ModelError.
void check_survival_contract(const SurvivalMap& f, std::size_t n, std::uint64_t seed,
                             int trials = 64);

}  // namespace sdde
