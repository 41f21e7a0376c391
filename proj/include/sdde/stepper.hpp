#pragma once

// Windowed Picard stepper for the semiflow (A_t, tau(t, .)), blow-up
// detection, restarts and solution residuals.

#include "sdde/delay.hpp"
#include "sdde/field.hpp"
#include "sdde/history.hpp"
#include "sdde/model.hpp"

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sdde {

struct SolverConfig {
    double dt = 1e-3;                  // substep
    std::size_t window_steps = 8;      // k: substeps per Picard window
    double picard_tol = 1e-10;         // on sup|A^{n+1} - A^n| / (1 + sup|A|)
    std::size_t picard_max_iter = 50;
    double blowup_threshold = 1e6;     // A_max
    double tau_tol = 1e-12;            // relative residual tolerance of the delay root
    double alpha = 0.0;                // norm weight
    double norm_window = 0.0;          // T_w; 0 picks 10 / alpha or the horizon
    std::size_t max_halvings = 10;     // dt floor is dt / 2^max_halvings
    bool use_radius = false;           // first window length from choose_radius
    double radius_bound = 0.0;         // M for choose_radius; 0 means 2 (M_0 + 1)

    /// Throws ValidationError on non-positive steps, tolerances or thresholds.
    void validate() const;
};

struct SemiflowState {
    HistoryFunction history;  // absolute time; current_time == t
    DelayField tau;
    DelayThreshold threshold;
    double t = 0.0;
};

struct WindowRecord {
    double t_start = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::size_t iterations = 0;
    std::vector<double> diffs;  // sup|A^{n+1} - A^n| per iterate
    double max_ratio = 0.0;     // max of diffs[n] / diffs[n - 1]
};

/// One trajectory advanced window by window. Owns its history, so the model
/// evaluator and the survival integral (which point into it) stay valid when
/// the object moves.
class Semiflow {
public:
    Semiflow(const ModelSpec& model, const InitialData& phi, std::span<const double> tau0,
             const SolverConfig& cfg);
    /// Continue from an extracted state (threshold taken as given).
    Semiflow(const ModelSpec& model, const SemiflowState& state, const SolverConfig& cfg);
    ~Semiflow();
    Semiflow(Semiflow&&) noexcept;
    Semiflow& operator=(Semiflow&&) noexcept;
    Semiflow(const Semiflow&) = delete;
    Semiflow& operator=(const Semiflow&) = delete;

    /// Picard iteration on the window whose node times are given (strictly
    /// increasing, after time()). On success the nodes are appended. Throws
    /// ContractionFailure (history unchanged) when the iterate differences
    /// stop shrinking or picard_max_iter is reached; DomainError and
    /// ModelError propagate, also with the history unchanged.
    WindowRecord picard_window(std::span<const double> times);

    /// Drop nodes after index keep - 1.
    void truncate(std::size_t keep);

    [[nodiscard]] double time() const;
    [[nodiscard]] const HistoryFunction& history() const;
    [[nodiscard]] const std::vector<Field>& tau_nodes() const;
    [[nodiscard]] const DelayThreshold& threshold() const;
    [[nodiscard]] double past_step() const;
    [[nodiscard]] SemiflowState state() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One window of k = cfg.window_steps substeps of cfg.dt from a state.
[[nodiscard]] SemiflowState picard_window(const SemiflowState& state, const ModelSpec& model,
                                          const SolverConfig& cfg);

enum class Verdict { ReachedHorizon, BlowUp, DomainError, ModelError, ContractionAbort };

[[nodiscard]] const char* verdict_name(Verdict v);

struct Trajectory {
    HistoryFunction history;
    std::vector<Field> tau;      // one delay field per history node
    DelayThreshold threshold;
    double past_step = 0.0;
    std::vector<WindowRecord> windows;
    std::size_t rejected_windows = 0;
    Verdict verdict = Verdict::ReachedHorizon;
    double t_bu = std::numeric_limits<double>::quiet_NaN();
    double bracket_lo = std::numeric_limits<double>::quiet_NaN();
    double bracket_hi = std::numeric_limits<double>::quiet_NaN();
    std::string message;
    double max_sup_norm = 0.0;
    double initial_dt = 0.0;     // after choose_radius, if used

    [[nodiscard]] double final_time() const { return history.current_time(); }
    [[nodiscard]] std::span<const double> final_values() const {
        return history.node_values(history.node_count() - 1);
    }
    /// (A_s, tau(s)) for a node time s.
    [[nodiscard]] SemiflowState state_at(double s) const;
};

/// Runs windows until the horizon, a blow-up (sup|A| > A_max, localized by
/// bisection on the interpolated sup norm), or an error. Never throws for
/// runtime failures; those set the verdict and keep the partial trajectory.
[[nodiscard]] Trajectory simulate(const ModelSpec& model, const InitialData& phi,
                                  std::span<const double> tau0, double horizon,
                                  const SolverConfig& cfg);

struct RadiusInputs {
    double m0 = 0.0;             // ||phi||_{Lip_alpha} + ||tau_0||_inf
    double m = 0.0;              // target bound, > m0
    double phi_max = 0.0;
    double tau_max = 0.0;
    double lipschitz_tau = 0.0;  // L_tau
    double phi_lip = 0.0;        // ||phi||_Lip on [-sup tau_0, 0]
    double rhs_at_zero = 0.0;    // ||F(0,0,0)||_inf
    LipschitzModulus modulus;
};

struct RadiusChoice {
    double r = 0.0;
    bool constrained = false;   // false when no modulus was declared
    double m_tilde = 0.0;
    double growth = 0.0;        // (2 M~ + tau_max) L(2 M~ + tau_max) + ||F(0,0,0)||
    double m_hat_l = 0.0;
    double contraction = 0.0;   // C
};

/// Largest r = r_max 2^{-j} with m0 + r * growth <= m and r * C < 1/2.
/// Without a modulus returns r_max, constrained == false.
[[nodiscard]] RadiusChoice choose_radius(const RadiusInputs& in, double r_max);

/// Inputs for choose_radius assembled from initial data; M from
/// cfg.radius_bound.
[[nodiscard]] RadiusInputs radius_inputs(const ModelSpec& model, const InitialData& phi,
                                         std::span<const double> tau0, const SolverConfig& cfg);

struct RestartDeviation {
    double a = 0.0;    // max |A_direct - A_restart| at time s + t
    double tau = 0.0;  // same for tau
    [[nodiscard]] double max() const { return a > tau ? a : tau; }
};

/// Compare a direct run to s + t with a run to s that is restarted from its
/// rebased state (threshold recomputed) and run t further. Throws
/// DomainError if either run ends early.
[[nodiscard]] RestartDeviation restart_and_compare(const ModelSpec& model, const InitialData& phi,
                                                   std::span<const double> tau0, double s,
                                                   double t, const SolverConfig& cfg);

struct ResidualReport {
    double a_residual = 0.0;          // max |A(t) - phi(0) - int_0^t F|
    double threshold_residual = 0.0;  // max |int_{t - tau}^{t} f(A) - delta_0|
    std::size_t samples = 0;
    [[nodiscard]] double max() const {
        return a_residual > threshold_residual ? a_residual : threshold_residual;
    }
};

/// Both solution identities at the given times, using composite Simpson over
/// each history cell (midpoint delays re-solved) as an independent quadrature.
/// Times may fall inside cells; the piecewise-linear A is then checked
/// between nodes, where its defect scales with the step.
[[nodiscard]] ResidualReport verify_solution_residual(const Trajectory& traj,
                                                      const ModelSpec& model,
                                                      std::span<const double> sample_times,
                                                      double tau_tol = 1e-12);

/// Every stride-th node time of a trajectory, always including the last.
[[nodiscard]] std::vector<double> sample_node_times(const Trajectory& traj, std::size_t stride);

}  // namespace sdde
