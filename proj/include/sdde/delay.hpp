#pragma once

// State-dependent delay: the threshold delta_0, the root tau of the threshold
// integral equation, the equivalent delay ODE, and a-priori bounds.

#include "sdde/field.hpp"
#include "sdde/history.hpp"
#include "sdde/survival.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sdde {

/// delta_0(x) = integral of f(phi(s,.))(x) over [-tau_0(x), 0]. Non-negative.
struct DelayThreshold {
    Field values;
};

/// tau(t, x) >= 0, one value per grid point.
struct DelayField {
    Field values;
};

/// Running integral of s -> f(A(s,.))(x) for every grid point.
///
/// The integrand is sampled at the history's nodes for s >= 0 and at virtual
/// nodes -k * past_step for s < 0, and integrated as its piecewise-linear
/// interpolant (composite trapezoid, partial cells exact). primitive(s) is
/// the signed integral from 0 to s, so the integral over [a, b] is
/// primitive(b) - primitive(a).
///
/// Tracks the history by node serial: appended, popped or replaced nodes are
/// picked up on the next query. Not thread-safe (lazy extension).
class SurvivalIntegral {
public:
    SurvivalIntegral(const HistoryFunction& history, const SurvivalMap& f, double past_step,
                     std::size_t max_past_nodes = std::size_t{1} << 17);

    [[nodiscard]] double primitive(double s, std::size_t j);
    /// Interpolated integrand f(A(s,.))(x_j).
    [[nodiscard]] double integrand(double s, std::size_t j);
    [[nodiscard]] double integral(double a, double b, std::size_t j) {
        return primitive(b, j) - primitive(a, j);
    }

    /// Make sure virtual past nodes reach down to s. Throws DomainError
    /// past the node cap.
    void ensure_past(double s);
    void sync();

    [[nodiscard]] double past_step() const noexcept { return h_; }
    [[nodiscard]] const HistoryFunction& history() const noexcept { return *history_; }
    [[nodiscard]] const SurvivalMap& survival() const noexcept { return *f_; }
    [[nodiscard]] std::size_t grid_size() const noexcept { return n_; }

private:
    void locate_forward(double s, std::size_t& cell, double& weight) const;

    const HistoryFunction* history_;
    const SurvivalMap* f_;
    std::size_t n_;
    double h_;
    std::size_t max_past_;

    std::vector<double> fwd_f_;    // node-major, n_ per node
    std::vector<double> fwd_cum_;  // integral from 0 to t_i
    std::vector<std::uint64_t> fwd_serials_;

    std::vector<double> past_f_;    // k = 1..K
    std::vector<double> past_cum_;  // integral from -k h to 0 (>= 0)
    std::size_t past_nodes_ = 0;    // K
};

struct TauSolveOptions {
    double tol = 1e-10;               // relative residual tolerance
    double past_step = 1e-3;          // virtual node spacing for s < 0
    double initial_window = 1.0;      // bracket when no tau_0 is supplied
    std::size_t max_past_nodes = std::size_t{1} << 17;
};

/// Root of G(tau) = int_{t - tau}^{t} f(A(s,.))(x_j) ds - delta on [0, upper],
/// growing upper by doubling while G(upper) < 0. A positive lower is used as
/// the left bracket end when G(lower) < 0 (a hint from the previous step).
/// For delta <= 0 returns the explicit branch delta / f(A(t,.))(x_j).
[[nodiscard]] double solve_tau_point(SurvivalIntegral& q, double t, std::size_t j, double delta,
                                     double upper, double tol, double lower = 0.0);

/// Per-point roots into out. upper[j] is the initial bracket end (t + tau_0(x_j)
/// along trajectories, which always brackets).
void solve_tau(SurvivalIntegral& q, double t, std::span<const double> delta,
               std::span<const double> upper, double tol, std::span<double> out);

/// Standalone functional: tau(A_t, delta) for a history evaluated at time t.
/// tau0 may be empty, in which case the bracket starts at t + initial_window.
[[nodiscard]] DelayField solve_tau(const HistoryFunction& history, double t,
                                   const DelayThreshold& delta, const SurvivalMap& f,
                                   std::span<const double> tau0, const TauSolveOptions& opt = {});

/// delta_0 by the same quadrature as the solver. Throws ValidationError on
/// negative tau_0 entries.
[[nodiscard]] DelayThreshold compute_threshold(SurvivalIntegral& q, std::span<const double> tau0);
[[nodiscard]] DelayThreshold compute_threshold(const InitialData& phi, std::span<const double> tau0,
                                               const SurvivalMap& f, double step);

/// Right-hand side of the delay ODE: 1 - f(A(t,.))(x) / f(A(t - tau(t,x),.))(x).
[[nodiscard]] Field tau_ode_rhs(const HistoryFunction& history, const DelayField& tau,
                                const SurvivalMap& f, double t);

/// Integrates the delay ODE from tau_0 at t = 0 with Heun's method on a
/// uniform step; returns tau at every step (index i is time i * dt).
[[nodiscard]] std::vector<Field> integrate_tau_ode(const HistoryFunction& history,
                                                   const SurvivalMap& f,
                                                   std::span<const double> tau0, double t_end,
                                                   double dt);

/// A-priori bracket for tau along trajectories bounded by M.
struct TauBounds {
    double tau_min = 0.0;
    double tau_max = 0.0;
    double phi_max = 0.0;  // sup of |phi| over [-sup tau_0, 0]
    double m1 = 0.0;       // max(M, phi_max)
};

/// phi_max is sampled at the virtual node spacing sample_step.
[[nodiscard]] TauBounds tau_bounds(std::span<const double> tau0, const InitialData& phi,
                                   const SurvivalMap& f, double M, double sample_step);

/// L_tau = max(tau_bar_max * ||f||_Lip, 1) / inf_x f(M1)(x), with tau_bar_max and
/// M1 the larger of the two trajectories' values. Reconstructed from the
/// two inequalities in the Lipschitz estimate for the delay functional.
[[nodiscard]] double tau_lipschitz_estimate(const TauBounds& a, const TauBounds& b,
                                            const SurvivalMap& f, std::size_t n);

struct ComparisonOptions {
    double window = 4.0;  // ordering checked on [-window, 0]
    double step = 1e-2;
    double tol = 1e-10;
};

/// For phi <= phi_hat (checked on the sampled window; OrderingError
/// otherwise), whether tau(phi) <= tau(phi_hat) + tol at every point.
[[nodiscard]] bool check_monotone_comparison(const InitialData& phi, const InitialData& phi_hat,
                                             const DelayThreshold& delta, const SurvivalMap& f,
                                             const ComparisonOptions& opt = {});

}  // namespace sdde
