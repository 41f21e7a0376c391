#include "sdde/delay.hpp"

#include "sdde/errors.hpp"
#include "sdde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sdde {

SurvivalIntegral::SurvivalIntegral(const HistoryFunction& history, const SurvivalMap& f,
                                   double past_step, std::size_t max_past_nodes)
    : history_(&history), f_(&f), n_(history.grid_size()), h_(past_step), max_past_(max_past_nodes) {
    if (!(past_step > 0.0)) throw ValidationError("survival quadrature step must be positive");
    sync();
}

void SurvivalIntegral::sync() {
    const HistoryFunction& h = *history_;
    const std::size_t have = fwd_serials_.size();
    const std::size_t count = h.node_count();
    if (have == count && have > 0 && fwd_serials_.back() == h.node_serial(count - 1)) return;

    std::size_t keep = std::min(have, count);
    while (keep > 0 && fwd_serials_[keep - 1] != h.node_serial(keep - 1)) --keep;
    fwd_serials_.resize(keep);
    fwd_f_.resize(keep * n_);
    fwd_cum_.resize(keep * n_);

    for (std::size_t i = keep; i < count; ++i) {
        fwd_f_.resize((i + 1) * n_);
        fwd_cum_.resize((i + 1) * n_);
        std::span<double> fi{fwd_f_.data() + i * n_, n_};
        f_->apply(h.node_values(i), fi);
        std::span<double> ci{fwd_cum_.data() + i * n_, n_};
        if (i == 0) {
            std::fill(ci.begin(), ci.end(), 0.0);
        } else {
            const double half = 0.5 * (h.node_time(i) - h.node_time(i - 1));
            std::span<const double> prev_f{fwd_f_.data() + (i - 1) * n_, n_};
            std::span<const double> prev_c{fwd_cum_.data() + (i - 1) * n_, n_};
            kernels::trapezoid_accumulate(prev_c, half, prev_f, fi, ci);
        }
        fwd_serials_.push_back(h.node_serial(i));
    }
    if (!all_finite(fwd_f_)) throw ModelError("survival map '" + f_->name() + "' returned a non-finite value");
}

void SurvivalIntegral::ensure_past(double s) {
    if (s >= 0.0) return;
    const auto needed = static_cast<std::size_t>(std::ceil(-s / h_));
    if (needed <= past_nodes_) return;
    if (needed > max_past_) {
        std::ostringstream os;
        os << "delay integral needs history back to t=" << s << ", beyond the "
           << max_past_ << "-node window (" << -static_cast<double>(max_past_) * h_ << ")";
        throw DomainError(os.str());
    }
    past_f_.resize(needed * n_);
    past_cum_.resize(needed * n_);
    Field phi(n_);
    for (std::size_t k = past_nodes_ + 1; k <= needed; ++k) {
        const double sk = -static_cast<double>(k) * h_;
        history_->initial().sample(sk, phi);
        std::span<double> fk{past_f_.data() + (k - 1) * n_, n_};
        f_->apply(phi, fk);
        if (!all_finite(fk)) throw ModelError("survival map returned a non-finite value");
        std::span<double> ck{past_cum_.data() + (k - 1) * n_, n_};
        if (k == 1) {
            const Field zero(n_, 0.0);
            kernels::trapezoid_accumulate(zero, 0.5 * h_, {fwd_f_.data(), n_}, fk, ck);
        } else {
            kernels::trapezoid_accumulate({past_cum_.data() + (k - 2) * n_, n_}, 0.5 * h_,
                                          {past_f_.data() + (k - 2) * n_, n_}, fk, ck);
        }
    }
    past_nodes_ = needed;
}

void SurvivalIntegral::locate_forward(double s, std::size_t& cell, double& weight) const {
    const HistoryFunction& h = *history_;
    if (s > h.current_time()) {
        std::ostringstream os;
        os << "survival integral queried at t=" << s << " beyond current_time=" << h.current_time();
        throw HistoryOverrun(os.str());
    }
    cell = h.cell_index(s);
    const double ti = h.node_time(cell);
    weight = s == ti ? 0.0 : (s - ti) / (h.node_time(cell + 1) - ti);
}

double SurvivalIntegral::primitive(double s, std::size_t j) {
    sync();
    if (s >= 0.0) {
        std::size_t i = 0;
        double w = 0.0;
        locate_forward(s, i, w);
        const double ci = fwd_cum_[i * n_ + j];
        if (w == 0.0) return ci;
        const double fa = fwd_f_[i * n_ + j];
        const double fb = fwd_f_[(i + 1) * n_ + j];
        const double fs = (1.0 - w) * fa + w * fb;
        return ci + 0.5 * (s - history_->node_time(i)) * (fa + fs);
    }
    ensure_past(s);
    const auto k = static_cast<std::size_t>(std::floor(-s / h_));
    const double a = -static_cast<double>(k) * h_;
    const double fa = k == 0 ? fwd_f_[j] : past_f_[(k - 1) * n_ + j];
    const double ca = k == 0 ? 0.0 : past_cum_[(k - 1) * n_ + j];
    if (s == a) return -ca;
    if (k + 1 > past_nodes_) ensure_past(-static_cast<double>(k + 1) * h_);
    const double fb = past_f_[k * n_ + j];
    const double w = (a - s) / h_;
    const double fs = (1.0 - w) * fa + w * fb;
    return -(ca + 0.5 * (a - s) * (fa + fs));
}

double SurvivalIntegral::integrand(double s, std::size_t j) {
    sync();
    if (s >= 0.0) {
        std::size_t i = 0;
        double w = 0.0;
        locate_forward(s, i, w);
        if (w == 0.0) return fwd_f_[i * n_ + j];
        return (1.0 - w) * fwd_f_[i * n_ + j] + w * fwd_f_[(i + 1) * n_ + j];
    }
    ensure_past(s);
    const auto k = static_cast<std::size_t>(std::floor(-s / h_));
    const double a = -static_cast<double>(k) * h_;
    const double fa = k == 0 ? fwd_f_[j] : past_f_[(k - 1) * n_ + j];
    if (s == a) return fa;
    if (k + 1 > past_nodes_) ensure_past(-static_cast<double>(k + 1) * h_);
    const double w = (a - s) / h_;
    return (1.0 - w) * fa + w * past_f_[k * n_ + j];
}

double solve_tau_point(SurvivalIntegral& q, double t, std::size_t j, double delta, double upper,
                       double tol, double lower) {
    if (!(delta > 0.0)) {
        if (delta == 0.0) return 0.0;
        return delta / q.integrand(t, j);
    }
    const double p_t = q.primitive(t, j);
    auto G = [&](double tau) { return p_t - q.primitive(t - tau, j) - delta; };

    double lo = 0.0;
    double g_lo = -delta;
    double hi = upper > 0.0 ? upper : 1.0;
    double g_hi = 0.0;
    try {
        if (lower > 0.0 && lower < hi) {
            const double g = G(lower);
            if (g == 0.0) return lower;
            if (g < 0.0) {
                lo = lower;
                g_lo = g;
            }
        }
        g_hi = G(hi);
        while (g_hi < 0.0) {
            lo = hi;
            g_lo = g_hi;
            hi *= 2.0;
            g_hi = G(hi);
        }
    } catch (const DomainError& e) {
        std::ostringstream os;
        os << "delay threshold " << delta << " at grid point " << j << " (t=" << t
           << ") exceeds the available survival mass: " << e.what();
        throw DomainError(os.str());
    }
    if (g_hi == 0.0) return hi;

    // Coarse bisection: G is monotone but only piecewise smooth.
    const double target = 1e-3 * (1.0 + hi);
    while (hi - lo > target) {
        const double mid = 0.5 * (lo + hi);
        const double g = G(mid);
        if (g == 0.0) return mid;
        if (g < 0.0) {
            lo = mid;
            g_lo = g;
        } else {
            hi = mid;
            g_hi = g;
        }
    }

    // Safeguarded secant; a step leaving the bracket or failing to halve the
    // residual twice in a row falls back to bisection.
    double x0 = lo, g0 = g_lo, x1 = hi, g1 = g_hi;
    int stalls = 0;
    for (int iter = 0; iter < 200; ++iter) {
        double x2 = std::numeric_limits<double>::quiet_NaN();
        if (stalls < 2 && g1 != g0) x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        if (!(x2 > lo && x2 < hi)) {
            x2 = 0.5 * (lo + hi);
            stalls = 0;
        }
        const double g2 = G(x2);
        if (g2 < 0.0) {
            lo = x2;
            g_lo = g2;
        } else {
            hi = x2;
            g_hi = g2;
        }
        stalls = std::abs(g2) > 0.5 * std::abs(g1) ? stalls + 1 : 0;
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = g2;
        const double slope = q.integrand(t - x2, j);
        if (std::abs(g2) <= tol * std::min(delta, slope * (1.0 + x2))) return x2;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + hi)) {
            return std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
        }
    }
    return std::abs(g_lo) < std::abs(g_hi) ? lo : hi;
}

void solve_tau(SurvivalIntegral& q, double t, std::span<const double> delta,
               std::span<const double> upper, double tol, std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = solve_tau_point(q, t, j, delta[j], upper[j], tol);
    }
}

DelayField solve_tau(const HistoryFunction& history, double t, const DelayThreshold& delta,
                     const SurvivalMap& f, std::span<const double> tau0, const TauSolveOptions& opt) {
    const std::size_t n = history.grid_size();
    if (delta.values.size() != n) throw ValidationError("threshold has the wrong grid size");
    if (!tau0.empty() && tau0.size() != n) throw ValidationError("tau_0 has the wrong grid size");
    SurvivalIntegral q(history, f, opt.past_step, opt.max_past_nodes);
    Field upper(n);
    for (std::size_t j = 0; j < n; ++j) upper[j] = t + (tau0.empty() ? opt.initial_window : tau0[j]);
    DelayField out{Field(n)};
    solve_tau(q, t, delta.values, upper, opt.tol, out.values);
    return out;
}

DelayThreshold compute_threshold(SurvivalIntegral& q, std::span<const double> tau0) {
    DelayThreshold out{Field(tau0.size())};
    for (std::size_t j = 0; j < tau0.size(); ++j) {
        if (!(tau0[j] >= 0.0)) {
            std::ostringstream os;
            os << "tau_0 must be non-negative (tau_0[" << j << "] = " << tau0[j] << ")";
            throw ValidationError(os.str());
        }
        out.values[j] = tau0[j] == 0.0 ? 0.0 : -q.primitive(-tau0[j], j);
    }
    return out;
}

DelayThreshold compute_threshold(const InitialData& phi, std::span<const double> tau0,
                                 const SurvivalMap& f, double step) {
    if (tau0.size() != phi.grid_size()) throw ValidationError("tau_0 has the wrong grid size");
    const HistoryFunction h(phi);
    SurvivalIntegral q(h, f, step);
    return compute_threshold(q, tau0);
}

Field tau_ode_rhs(const HistoryFunction& history, const DelayField& tau, const SurvivalMap& f,
                  double t) {
    const std::size_t n = history.grid_size();
    Field now(n), f_now(n), delayed(n), f_delayed(n), out(n);
    history.evaluate_field(t, now);
    f.apply(now, f_now);
    // Each point looks back by its own delay; a field-valued f needs the whole
    // delayed field at that time.
    for (std::size_t x = 0; x < n; ++x) {
        history.evaluate_field(t - tau.values[x], delayed);
        f.apply(delayed, f_delayed);
        if (!(f_now[x] > 0.0) || !(f_delayed[x] > 0.0)) {
            throw ModelError("survival map evaluated to a non-positive value");
        }
        out[x] = 1.0 - f_now[x] / f_delayed[x];
    }
    return out;
}

std::vector<Field> integrate_tau_ode(const HistoryFunction& history, const SurvivalMap& f,
                                     std::span<const double> tau0, double t_end, double dt) {
    if (!(dt > 0.0)) throw ValidationError("step must be positive");
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<Field> out;
    out.reserve(steps + 1);
    DelayField tau{Field(tau0.begin(), tau0.end())};
    out.push_back(tau.values);
    const std::size_t n = tau.values.size();
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double t_next = static_cast<double>(i + 1) * dt;
        const Field k1 = tau_ode_rhs(history, tau, f, t);
        DelayField predictor{Field(n)};
        for (std::size_t x = 0; x < n; ++x) predictor.values[x] = tau.values[x] + dt * k1[x];
        const Field k2 = tau_ode_rhs(history, predictor, f, t_next);
        for (std::size_t x = 0; x < n; ++x) tau.values[x] += 0.5 * dt * (k1[x] + k2[x]);
        out.push_back(tau.values);
    }
    return out;
}

TauBounds tau_bounds(std::span<const double> tau0, const InitialData& phi, const SurvivalMap& f,
                     double M, double sample_step) {
    const std::size_t n = tau0.size();
    TauBounds b;
    const double tau0_sup = tau0.empty() ? 0.0 : *std::max_element(tau0.begin(), tau0.end());
    Field buf(n);
    for (std::size_t k = 0;; ++k) {
        const double s = -static_cast<double>(k) * sample_step;
        const bool last = s <= -tau0_sup;
        phi.sample(last ? -tau0_sup : s, buf);
        b.phi_max = std::max(b.phi_max, kernels::max_abs(buf));
        if (last) break;
    }
    b.m1 = std::max(M, b.phi_max);

    // tau_0(x) f(phi_max)(x): f applied to the constant field phi_max.
    Field cfield(n), fvals(n);
    auto f_const = [&](double v) {
        std::fill(cfield.begin(), cfield.end(), v);
        f.apply(cfield, fvals);
        return fvals;
    };
    const Field f_phi_max = f_const(b.phi_max);
    const Field f_minus_phi_max = f_const(-b.phi_max);
    const Field f_minus_m1 = f_const(-b.m1);
    const Field f_m1 = f_const(b.m1);

    double num_min = std::numeric_limits<double>::infinity();
    double num_max = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        num_min = std::min(num_min, tau0[x] * f_phi_max[x]);
        num_max = std::max(num_max, tau0[x] * f_minus_phi_max[x]);
    }
    const double den_min = *std::max_element(f_minus_m1.begin(), f_minus_m1.end());
    const double den_max = *std::min_element(f_m1.begin(), f_m1.end());
    b.tau_min = n == 0 ? 0.0 : num_min / den_min;
    b.tau_max = n == 0 ? 0.0 : num_max / den_max;
    return b;
}

double tau_lipschitz_estimate(const TauBounds& a, const TauBounds& b, const SurvivalMap& f,
                              std::size_t n) {
    const double tau_bar_max = std::max(a.tau_max, b.tau_max);
    const double m1 = std::max(a.m1, b.m1);
    const double inf_f = f.on_constant(m1, n).first;
    return std::max(tau_bar_max * f.lipschitz(), 1.0) / inf_f;
}

bool check_monotone_comparison(const InitialData& phi, const InitialData& phi_hat,
                               const DelayThreshold& delta, const SurvivalMap& f,
                               const ComparisonOptions& opt) {
    const std::size_t n = phi.grid_size();
    if (phi_hat.grid_size() != n || delta.values.size() != n) {
        throw ValidationError("comparison inputs have mismatched grid sizes");
    }
    Field a(n), b(n);
    for (std::size_t k = 0;; ++k) {
        const double s = -static_cast<double>(k) * opt.step;
        if (s < -opt.window) break;
        phi.sample(s, a);
        phi_hat.sample(s, b);
        for (std::size_t x = 0; x < n; ++x) {
            if (a[x] > b[x]) {
                std::ostringstream os;
                os << "phi > phi_hat at t=" << s << ", x index " << x;
                throw OrderingError(os.str());
            }
        }
    }
    TauSolveOptions so;
    so.tol = opt.tol;
    so.past_step = opt.step;
    so.initial_window = opt.window;
    const HistoryFunction h(phi);
    const HistoryFunction h_hat(phi_hat);
    const DelayField tau = solve_tau(h, 0.0, delta, f, {}, so);
    const DelayField tau_hat = solve_tau(h_hat, 0.0, delta, f, {}, so);
    for (std::size_t x = 0; x < n; ++x) {
        if (tau.values[x] > tau_hat.values[x] + opt.tol * (1.0 + tau_hat.values[x])) return false;
    }
    return true;
}

}  // namespace sdde
