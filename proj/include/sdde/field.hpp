#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sdde {

/// Values of a continuous function on the discretized domain, one per grid point.
using Field = std::vector<double>;

/// Uniform periodic grid x_j = j / N on [0, 1). For the finite-species
/// model the N points are simply the species indices.
class Grid {
public:
    explicit Grid(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double spacing() const noexcept { return 1.0 / static_cast<double>(n_); }
    [[nodiscard]] double position(std::size_t j) const noexcept {
        return static_cast<double>(j) / static_cast<double>(n_);
    }

private:
    std::size_t n_;
};

[[nodiscard]] bool all_finite(std::span<const double> v);
[[nodiscard]] Field constant_field(std::size_t n, double value);

/// Evaluable initial history phi(t, x_j), valid for every t <= 0.
///
/// The callable is shared, so copies are cheap and a rebased history can
/// wrap its parent without copying node storage.
class InitialData {
public:
    using Fn = std::function<double(double t, std::size_t j)>;

    InitialData() = default;
    InitialData(std::size_t grid_size, Fn fn, std::string description = {});

    [[nodiscard]] double operator()(double t, std::size_t j) const { return (*fn_)(t, j); }
    void sample(double t, std::span<double> out) const;
    [[nodiscard]] Field sample(double t) const;

    [[nodiscard]] std::size_t grid_size() const noexcept { return n_; }
    [[nodiscard]] const std::string& description() const noexcept { return description_; }
    [[nodiscard]] bool valid() const noexcept { return static_cast<bool>(fn_); }

private:
    std::size_t n_ = 0;
    std::shared_ptr<const Fn> fn_;
    std::string description_;
};

/// Analytic presets for phi and tau_0. Each has an optional spatial
/// modulation a * cos(2 pi k x), so spatially varying data stays auditable.
///   constant:    c + a cos(2 pi k x)
///   linear:      c + b t + a cos(2 pi k x)
///   exponential: c e^{r t} + a cos(2 pi k x)
///   sinusoid:    c + a sin(omega t + 2 pi k x)
struct Preset {
    enum class Kind { Constant, Linear, Exponential, Sinusoid };
    Kind kind = Kind::Constant;
    double c = 0.0;
    double b = 0.0;
    double r = 0.0;
    double omega = 0.0;
    double a = 0.0;
    int k = 0;

    [[nodiscard]] double evaluate(double t, double x) const;
    [[nodiscard]] InitialData as_initial_data(const Grid& grid) const;
    /// Field at t = 0, used for tau_0.
    [[nodiscard]] Field as_field(const Grid& grid) const;
    [[nodiscard]] std::string describe() const;
};

}  // namespace sdde
