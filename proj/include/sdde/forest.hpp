#pragma once

// Spatial forest model: adults A, births B = (I - eps Lap)^{-1}[beta A],
// maturation delay tau, juveniles J.

#include "sdde/field.hpp"
#include "sdde/history.hpp"
#include "sdde/model.hpp"
#include "sdde/spatial.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sdde {

struct ForestParams {
    double mu_j = 0.0;   // juvenile mortality
    double mu_a = 0.0;   // adult mortality
    double beta = 0.0;   // birth rate
    double eps = 0.0;    // smoothing coefficient

    /// Throws ValidationError unless every parameter is finite and >= 0.
    void validate() const;
};

/// B(s, .) = R[beta A(s, .)] along a history. Values at computed nodes are
/// cached by node serial; for s < 0 they come from phi at virtual nodes
/// -k * past_step (memoized). Between nodes B is linear in time, which is
/// exact whenever A is (R is linear).
class BirthCache {
public:
    BirthCache(const HistoryFunction& history, ResolventOperator op, double beta, double past_step);

    void get(double s, std::span<double> out);
    [[nodiscard]] Field get(double s);
    [[nodiscard]] double get_point(double s, std::size_t x);

    /// Breakpoints of the piecewise-linear B strictly inside (a, b), ascending.
    void breakpoints(double a, double b, std::vector<double>& out);

    void sync();
    [[nodiscard]] const HistoryFunction& history() const noexcept { return *history_; }
    [[nodiscard]] const ResolventOperator& op() const noexcept { return op_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double past_step() const noexcept { return h_; }

private:
    void ensure_past(std::size_t k);
    [[nodiscard]] const double* past_node(std::size_t k);

    const HistoryFunction* history_;
    ResolventOperator op_;
    double beta_;
    double h_;
    std::size_t n_;
    std::vector<double> fwd_;
    std::vector<std::uint64_t> serials_;
    std::vector<double> past_;  // k = 1..K, n_ values each
    std::size_t past_nodes_ = 0;
    Field scratch_;
};

/// Forest right-hand side
///   e^{-mu_J tau} f(A(t,x)) / f(A(t - tau, x)) B(t - tau, x) - mu_A A(t,x)
/// with f used pointwise. Throws ValidationError for a field-valued f.
[[nodiscard]] ModelSpec make_forest_model(const ForestParams& p, std::size_t n,
                                          SurvivalMap f = SurvivalMap::inverse_positive_part());

/// The same model on one patch (no space), written as a one-species model
/// with B = beta A. Used as the reduction oracle for spatially constant data.
[[nodiscard]] ModelSpec make_nonspatial_forest_model(
    const ForestParams& p, SurvivalMap f = SurvivalMap::inverse_positive_part());

/// J(t, x) = int_{t - tau(t,x)}^{t} e^{-mu_J (t - s)} B(s, x) ds by the trapezoid
/// rule over the breakpoints of B, partial end cells exact on the interpolant.
[[nodiscard]] Field juvenile_integral(BirthCache& births, double t, std::span<const double> tau,
                                      double mu_j);

struct JuvenileDiagnostics {
    std::vector<std::size_t> nodes;
    std::vector<double> times;
    std::vector<Field> juveniles;      // J at each sampled node
    /// Balance residual at sampled interior nodes (central differences).
    std::vector<std::size_t> residual_nodes;
    std::vector<Field> residuals;
    double min_juvenile = 0.0;
    double max_residual = 0.0;
};

/// J at the sampled nodes of a computed history (tau given per node) and, at
/// every sampled interior node, the residual of
/// d/dt(A + J) = beta R A - mu_A A - mu_J J.
[[nodiscard]] JuvenileDiagnostics juvenile_diagnostics(const HistoryFunction& history,
                                                       const std::vector<Field>& tau,
                                                       const ForestParams& p, double past_step,
                                                       std::span<const std::size_t> sample_nodes);

/// Balance residual at node i from J at nodes i - 1, i, i + 1.
[[nodiscard]] Field balance_residual(BirthCache& births, std::size_t i,
                                     std::span<const double> j_prev, std::span<const double> j_mid,
                                     std::span<const double> j_next, const ForestParams& p);

/// expm by Taylor series with scaling and squaring.
[[nodiscard]] Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a);

struct ComparisonReport {
    bool holds = true;
    double max_excess = 0.0;   // max of u - bound - tol (1 + bound); <= 0 when it holds
    double worst_time = 0.0;
    std::size_t samples = 0;
};

/// u = A + J against e^{(beta R - mu I) t} u(0) with mu = min(mu_A, mu_J).
/// juveniles[i] is J at history node sample_nodes[i]; sample_nodes must start
/// with node 0. A sample passes when u <= bound + tol (1 + bound). Throws
/// SizeError for N > 256.
[[nodiscard]] ComparisonReport comparison_bound_check(const HistoryFunction& history,
                                                      std::span<const std::size_t> sample_nodes,
                                                      const std::vector<Field>& juveniles,
                                                      const ForestParams& p, double tol);

}  // namespace sdde
