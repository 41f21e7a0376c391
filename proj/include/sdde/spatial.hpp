#pragma once

#include "sdde/field.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace sdde {

/// (I - eps Lap_h)^{-1} on the periodic grid of [0, 1), with Lap_h the
/// second-difference Laplacian. Diagonal in the discrete Fourier basis with
/// multipliers 1 / (1 + eps lambda_k), lambda_k = (2 - 2 cos(2 pi k / N)) / h^2.
///
/// Immutable after construction; apply() is thread-safe.
class ResolventOperator {
public:
    ResolventOperator(double eps, std::size_t n);
    ~ResolventOperator();
    ResolventOperator(const ResolventOperator&);
    ResolventOperator& operator=(const ResolventOperator&);
    ResolventOperator(ResolventOperator&&) noexcept;
    ResolventOperator& operator=(ResolventOperator&&) noexcept;

    [[nodiscard]] double eps() const noexcept { return eps_; }
    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    /// Multipliers for k = 0 .. N/2 (the rest follow by symmetry).
    [[nodiscard]] const std::vector<double>& symbol() const noexcept { return symbol_; }
    [[nodiscard]] static double eigenvalue(std::size_t k, std::size_t n);

    void apply(std::span<const double> g, std::span<double> u) const;
    [[nodiscard]] Field apply(std::span<const double> g) const;

private:
    struct Plans;
    double eps_;
    std::size_t n_;
    std::vector<double> symbol_;
    std::shared_ptr<const Plans> plans_;
};

/// Explicit dense inverse of I - eps Lap_h by LU, independent of the FFT path.
/// Throws SizeError for N > 256.
[[nodiscard]] Eigen::MatrixXd resolvent_matrix(const ResolventOperator& op);

inline constexpr std::size_t kDenseOracleLimit = 256;

}  // namespace sdde
