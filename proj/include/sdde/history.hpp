#pragma once

#include "sdde/field.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sdde {

/// The solution A on (-inf, t_n]: analytic initial data for t < 0 joined to
/// an append-only sampled segment 0 = t_0 < t_1 < ... < t_n, linear in time
/// between nodes.
///
/// Node 0 always equals phi(0, .). Only the owning solver mutates a history;
/// pop_back exists so a Picard window can replace its tentative tail, and
/// every appended node gets a fresh serial so caches keyed on nodes can tell
/// a replaced node from the one it replaced.
class HistoryFunction {
public:
    HistoryFunction() = default;
    explicit HistoryFunction(InitialData initial);

    [[nodiscard]] std::size_t grid_size() const noexcept { return n_; }
    [[nodiscard]] double current_time() const noexcept { return times_.back(); }
    [[nodiscard]] std::size_t node_count() const noexcept { return times_.size(); }
    [[nodiscard]] double node_time(std::size_t i) const { return times_[i]; }
    [[nodiscard]] std::span<const double> node_values(std::size_t i) const {
        return {values_.data() + i * n_, n_};
    }
    [[nodiscard]] std::uint64_t node_serial(std::size_t i) const { return serials_[i]; }
    [[nodiscard]] const InitialData& initial() const noexcept { return initial_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

    /// A(t, x_j). Throws HistoryOverrun for t > current_time.
    [[nodiscard]] double evaluate(double t, std::size_t j) const;
    void evaluate_field(double t, std::span<double> out) const;
    [[nodiscard]] Field evaluate_field(double t) const;

    /// Index i with t_i <= t < t_{i+1} (last node when t == current_time).
    /// Requires 0 <= t <= current_time.
    [[nodiscard]] std::size_t cell_index(double t) const;

    /// Append a node strictly after current_time.
    void append(double t, std::span<const double> values);
    /// Drop the newest node. Node 0 can never be removed.
    void pop_back();

    /// History of A_s: H(theta) = A(s + theta) for theta <= 0, current_time 0.
    /// Throws DomainError unless 0 <= s <= current_time.
    [[nodiscard]] HistoryFunction rebase(double s) const;

private:
    std::size_t n_ = 0;
    InitialData initial_;
    std::vector<double> times_;
    std::vector<double> values_;
    std::vector<std::uint64_t> serials_;
    std::uint64_t next_serial_ = 0;
};

/// Truncation window for the weighted norms. Samples are taken at every
/// computed node inside the window and every sample_step in the initial era.
struct NormWindow {
    double alpha = 0.0;
    double length = 1.0;
    double sample_step = 1e-3;

    /// 10 / alpha when alpha > 0, otherwise the fallback (usually the horizon).
    static NormWindow with_default_length(double alpha, double fallback, double sample_step);
};

/// sup over sampled theta in [-T_w, 0] of e^{-alpha|theta|} |A(t+theta, x)|, with
/// t the history's current time. The neglected tail (theta < -T_w) is bounded by
/// e^{-alpha T_w} times the sup of |A| there.
[[nodiscard]] double weighted_sup_norm(const HistoryFunction& h, const NormWindow& w);

/// Lipschitz seminorm of theta -> e^{-alpha|theta|} A(t+theta, .) over the window,
/// as the max adjacent difference quotient over the sample points. Exact for
/// piecewise-linear data with alpha = 0 when samples include every kink.
[[nodiscard]] double weighted_lip_seminorm(const HistoryFunction& h, const NormWindow& w);

/// Same seminorm for the difference A_t - A_s of two rebased states of h.
[[nodiscard]] double weighted_lip_seminorm_difference(const HistoryFunction& h, double t,
                                                      double s, const NormWindow& w);

/// Lipschitz seminorm of A on [a, b] (unweighted), over nodes and sample points.
[[nodiscard]] double lip_seminorm_on(const HistoryFunction& h, double a, double b,
                                     double sample_step);

}  // namespace sdde
