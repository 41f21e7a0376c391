// Acceptance gate: one PASS/FAIL line per criterion, exit 0 iff all pass.
// Oracles here are computed independently of the library where the library
// has an equivalent (closed forms, own quadrature, own dense solves).

#include "sdde/delay.hpp"
#include "sdde/forest.hpp"
#include "sdde/history.hpp"
#include "sdde/kernels.hpp"
#include "sdde/model.hpp"
#include "sdde/spatial.hpp"
#include "sdde/stepper.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

using namespace sdde;

namespace {

using Clock = std::chrono::steady_clock;
using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

InitialData constant(std::size_t n, double v) {
    return InitialData(n, [v](double, std::size_t) { return v; });
}

SolverConfig with_dt(double dt) {
    SolverConfig c;
    c.dt = dt;
    return c;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// Smooth random history: c + a cos(2 pi (k x + p)) + d sin(w t + q).
struct Wave {
    double c, a, p, d, w, q;
    int k;

    static Wave draw(Rng& rng, double c_lo, double c_hi, double amp) {
        Wave r{};
        r.c = uniform(rng, c_lo, c_hi);
        r.a = uniform(rng, -amp, amp);
        r.p = uniform(rng, 0.0, 1.0);
        r.d = uniform(rng, -amp, amp);
        r.w = uniform(rng, 0.5, 3.0);
        r.q = uniform(rng, 0.0, 6.283185307179586);
        r.k = static_cast<int>(uniform(rng, 0.0, 3.999));
        return r;
    }
    [[nodiscard]] double at(double t, double x) const {
        return c + a * std::cos(2.0 * std::numbers::pi * (k * x + p)) + d * std::sin(w * t + q);
    }
    [[nodiscard]] InitialData data(std::size_t n) const {
        const Wave s = *this;
        return InitialData(n, [s, n](double t, std::size_t j) { return s.at(t, static_cast<double>(j) / n); });
    }
    [[nodiscard]] Field zero(std::size_t n) const {
        Field f(n);
        for (std::size_t j = 0; j < n; ++j) f[j] = at(0.0, static_cast<double>(j) / n);
        return f;
    }
};

// ---------------------------------------------------------------------- 1

HistoryFunction ramp(double t_end, double dt) {
    HistoryFunction h(constant(1, 0.0));
    const auto steps = static_cast<long>(std::llround(t_end / dt));
    for (long i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double v[1] = {t};
        h.append(t, v);
    }
    return h;
}

double ramp_tau(double t) {
    return t < std::numbers::e - 1.0 ? 1.0 + t - std::log1p(t) : (1.0 + t) * (1.0 - std::exp(-1.0));
}

Outcome criterion_delay() {
    Outcome o;
    const SurvivalMap f = SurvivalMap::inverse_positive_part();
    const double dt = 1e-3;
    const HistoryFunction h = ramp(5.0, dt);
    SurvivalIntegral q(h, f, dt);
    double err = 0.0;
    for (long i = 1000; i <= 5000; ++i) {
        const double t = static_cast<double>(i) * dt;
        err = std::max(err, std::abs(solve_tau_point(q, t, 0, 1.0, t + 1.0, 1e-13) - ramp_tau(t)));
    }
    o.require(err <= 1e-6, "closed-form error " + num(err) + " <= 1e-6");

    auto gap = [&](double step) {
        const HistoryFunction hh = ramp(5.0, step);
        const auto ode = integrate_tau_ode(hh, f, Field{1.0}, 5.0, step);
        SurvivalIntegral qq(hh, f, step);
        double g = 0.0;
        for (std::size_t i = 0; i < ode.size(); ++i) {
            const double t = static_cast<double>(i) * step;
            g = std::max(g, std::abs(ode[i][0] - solve_tau_point(qq, t, 0, 1.0, t + 1.0, 1e-13)));
        }
        return g;
    };
    const double g1 = gap(dt), g2 = gap(dt / 2.0);
    o.require(g1 / g2 >= 1.8, "ODE gap " + num(g1) + " -> " + num(g2) + ", ratio " + num(g1 / g2) + " >= 1.8");
    return o;
}

// ---------------------------------------------------------------------- 2

Outcome criterion_monotone() {
    Outcome o;
    Rng rng(2024);
    const SurvivalMap f = SurvivalMap::inverse_positive_part();
    auto g = [](double v) { return 1.0 / (1.0 + std::max(v, 0.0)); };
    double worst_lag = -1.0, worst_bound = -1.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 4;
        const Wave w = Wave::draw(rng, -0.5, 1.5, 0.5);
        const Field tau0 = Wave::draw(rng, 0.6, 1.2, 0.3).zero(n);
        const double mu = uniform(rng, 0.2, 2.0);
        const SolverConfig cfg = with_dt(1e-2);
        const Trajectory tr = simulate(make_decay_model(n, mu, f), w.data(n), tau0, 2.0, cfg);
        if (tr.verdict != Verdict::ReachedHorizon) {
            o.require(false, "trajectory " + std::to_string(trial) + " ended early");
            return o;
        }
        for (std::size_t i = 1; i < tr.tau.size(); ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const double drop = (tr.history.node_time(i - 1) - tr.tau[i - 1][j]) - (tr.history.node_time(i) - tr.tau[i][j]);
                worst_lag = std::max(worst_lag, drop - 10.0 * cfg.tau_tol * (1.0 + tr.tau[i][j]));
            }
        }
        // Bounds from the constant-field formulas, with phi_max sampled here.
        const double t0max = *std::max_element(tau0.begin(), tau0.end());
        double phi_max = 0.0;
        for (double s = -t0max; s <= 0.0; s += 1e-3) {
            for (std::size_t j = 0; j < n; ++j) phi_max = std::max(phi_max, std::abs(w.at(s, static_cast<double>(j) / n)));
        }
        for (std::size_t j = 0; j < n; ++j) phi_max = std::max(phi_max, std::abs(w.at(-t0max, static_cast<double>(j) / n)));
        double m = 0.0;
        for (std::size_t i = 0; i < tr.history.node_count(); ++i) m = std::max(m, kernels::max_abs(tr.history.node_values(i)));
        const double m1 = std::max(m, phi_max);
        const double t0min = *std::min_element(tau0.begin(), tau0.end());
        const double lo = t0min * g(phi_max) / g(-m1);
        const double hi = t0max * g(-phi_max) / g(m1);
        for (const Field& tau : tr.tau) {
            for (const double v : tau) worst_bound = std::max(worst_bound, std::max(lo - v, v - hi) - 1e-9 * (1.0 + v));
        }
    }
    o.require(worst_lag <= 0.0, "lag drop beyond tolerance " + num(worst_lag) + " <= 0 on 100 runs");
    o.require(worst_bound <= 0.0, "a priori bound excess " + num(worst_bound) + " <= 0");

    std::size_t violations = 0;
    const double tol = 1e-10;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 4;
        const Wave w = Wave::draw(rng, -1.0, 1.0, 0.7);
        const double lift = uniform(rng, 0.0, 1.0), w2 = uniform(rng, 0.5, 3.0), q2 = uniform(rng, 0.0, 6.0);
        const InitialData lo = w.data(n);
        const InitialData hi(n, [w, lift, w2, q2, n](double t, std::size_t j) {
            return w.at(t, static_cast<double>(j) / n) + lift * (1.0 + std::sin(w2 * t + q2));
        });
        Field dv(n);
        for (auto& v : dv) v = uniform(rng, 0.05, 0.8);
        TauSolveOptions opt;
        opt.tol = tol;
        opt.past_step = 1e-2;
        const DelayField a = solve_tau(HistoryFunction(lo), 0.0, DelayThreshold{dv}, f, {}, opt);
        const DelayField b = solve_tau(HistoryFunction(hi), 0.0, DelayThreshold{dv}, f, {}, opt);
        for (std::size_t j = 0; j < n; ++j) {
            if (a.values[j] > b.values[j] + tol * (1.0 + b.values[j])) ++violations;
        }
    }
    o.require(violations == 0, std::to_string(violations) + " comparison violations in 1000 ordered pairs");
    return o;
}

// ---------------------------------------------------------------------- 3

Outcome criterion_contraction() {
    Outcome o;
    SolverConfig cfg = with_dt(5e-2);
    cfg.use_radius = true;
    const ModelSpec m = make_decay_model(2, 1.0, SurvivalMap::inverse_positive_part());
    const Trajectory tr = simulate(m, constant(2, 1.0), Field(2, 1.0), 2.0, cfg);
    o.require(tr.verdict == Verdict::ReachedHorizon && tr.rejected_windows == 0,
              std::string("all windows converged (verdict ") + verdict_name(tr.verdict) + ", rejected " +
                  std::to_string(tr.rejected_windows) + ")");
    std::size_t good = 0, fitted = 0;
    double slope_sum = 0.0;
    for (const WindowRecord& w : tr.windows) {
        // Successive ratios and a least-squares slope of log diff against the
        // iterate index, over diffs above the round-off floor.
        std::vector<double> ys;
        for (const double d : w.diffs) {
            if (d > 1e-14) ys.push_back(std::log(d));
        }
        bool ok = true;
        for (std::size_t i = 1; i < ys.size(); ++i) ok = ok && ys[i] - ys[i - 1] <= std::log(0.5);
        if (ok) ++good;
        if (ys.size() >= 2) {
            const double nn = static_cast<double>(ys.size());
            double sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < ys.size(); ++i) {
                const double x = static_cast<double>(i);
                sx += x;
                sy += ys[i];
                sxx += x * x;
                sxy += x * ys[i];
            }
            slope_sum += (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
            ++fitted;
        }
    }
    const double frac = tr.windows.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(tr.windows.size());
    o.require(frac >= 0.95, "ratio <= 0.5 on " + num(frac * 100.0) + "% of " + std::to_string(tr.windows.size()) +
                                " windows (dt " + num(tr.initial_dt) + ")");
    const double slope = fitted ? slope_sum / static_cast<double>(fitted) : 0.0;
    o.require(fitted > 0 && slope <= std::log(0.5) + 0.1, "mean log-diff slope " + num(slope) + " <= log 0.5 + 0.1");
    return o;
}

// ---------------------------------------------------------------------- 4

Outcome criterion_semigroup() {
    Outcome o;
    ForestParams fp;
    fp.mu_j = 0.3;
    fp.mu_a = 0.5;
    fp.beta = 1.1;
    fp.eps = 0.02;
    const InitialData wave(16, [](double t, std::size_t j) { return 1.0 + 0.3 * std::cos(0.4 * j + 0.5 * t); });
    struct Case {
        const char* name;
        ModelSpec model;
        InitialData phi;
        Field tau0;
        double dt;
    };
    const std::vector<Case> cases = {
        {"decay", make_decay_model(4, 0.8, SurvivalMap::inverse_positive_part()),
         InitialData(4, [](double t, std::size_t j) { return 1.0 + 0.1 * j + 0.2 * std::sin(t); }), Field(4, 0.7), 1e-3},
        {"delayed_growth", make_delayed_growth_model(4, 0.6, 0.9, SurvivalMap::inverse_positive_part()),
         InitialData(4, [](double t, std::size_t j) { return 1.0 + 0.1 * j + 0.2 * std::cos(t); }), Field(4, 0.9), 1e-3},
        {"forest", make_forest_model(fp, 16), wave, Field(16, 0.6), 5e-3},
    };
    const double limit = 10.0 * SolverConfig{}.picard_tol;
    for (const Case& c : cases) {
        double worst = 0.0;
        for (const double s : {0.5, 1.0, 2.0}) {
            for (const double t : {0.5, 1.0, 2.0}) {
                worst = std::max(worst, restart_and_compare(c.model, c.phi, c.tau0, s, t, with_dt(c.dt)).max());
            }
        }
        o.require(worst <= limit, std::string(c.name) + " deviation " + num(worst) + " <= " + num(limit));
    }
    return o;
}

// ---------------------------------------------------------------------- 5

Outcome criterion_blowup() {
    Outcome o;
    for (const auto& [dt, tol] : {std::pair{1e-3, 0.05}, std::pair{1e-4, 0.01}}) {
        SolverConfig cfg = with_dt(dt);
        cfg.blowup_threshold = 1e3;
        const Trajectory tr = simulate(make_riccati_model(1), constant(1, 1.0), Field{1.0}, 2.0, cfg);
        const bool blew = tr.verdict == Verdict::BlowUp;
        const double err = blew ? std::abs(tr.t_bu - 1.0) : 1.0;
        o.require(blew && err <= tol, "dt " + num(dt) + ": verdict " + verdict_name(tr.verdict) + ", |T_BU - 1| = " +
                                          num(err) + " <= " + num(tol));
    }
    return o;
}

// ---------------------------------------------------------------------- 6

Outcome criterion_spatial() {
    Outcome o;
    Rng rng(66);
    const std::size_t n = 128;
    double min_pos = 1.0, sup_excess = -1.0, mean_err = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const ResolventOperator op(uniform(rng, 0.0, 0.1), n);
        Field g(n);
        for (auto& v : g) v = uniform(rng, 0.0, 1.0);
        min_pos = std::min(min_pos, kernels::min_value(op.apply(g)));
        for (auto& v : g) v = uniform(rng, -1.0, 1.0);
        const Field u = op.apply(g);
        sup_excess = std::max(sup_excess, kernels::max_abs(u) - kernels::max_abs(g));
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += u[j] - g[j];
        mean_err = std::max(mean_err, std::abs(d) / static_cast<double>(n));
    }
    o.require(min_pos >= 0.0, "min of R g for g >= 0: " + num(min_pos));
    o.require(sup_excess <= 1e-15, "sup |Rg| - sup |g| = " + num(sup_excess) + " <= 1e-15");
    o.require(mean_err <= 1e-12, "mean drift " + num(mean_err));

    double worst = 0.0;
    for (const std::size_t m : {2, 5, 16, 64, 100, 128, 200, 256}) {
        const double eps = uniform(rng, 1e-4, 0.1);
        const double k = eps * static_cast<double>(m * m);
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            a(r, r) += 2.0 * k;
            a(r, static_cast<Eigen::Index>((i + 1) % m)) -= k;
            a(r, static_cast<Eigen::Index>((i + m - 1) % m)) -= k;
        }
        Eigen::VectorXd g(static_cast<Eigen::Index>(m));
        for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = uniform(rng, -1.0, 1.0);
        const Eigen::VectorXd ref = a.fullPivLu().solve(g);
        const Field u = ResolventOperator(eps, m).apply(std::span<const double>(g.data(), m));
        for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(u[j] - ref(static_cast<Eigen::Index>(j))));
    }
    o.require(worst <= 1e-12, "FFT vs dense solve " + num(worst) + " <= 1e-12");
    return o;
}

// ---------------------------------------------------------------------- 7

ForestParams draw_params(Rng& rng) {
    ForestParams p;
    p.mu_j = uniform(rng, 0.0, 1.0);
    p.mu_a = uniform(rng, 0.1, 1.0);
    p.beta = uniform(rng, 0.2, 1.5);
    p.eps = uniform(rng, 0.0, 0.05);
    return p;
}

std::vector<std::size_t> nodes_at_times(const HistoryFunction& h, const std::vector<double>& ts) {
    std::vector<std::size_t> out;
    for (const double t : ts) {
        const std::size_t i = h.cell_index(t);
        const std::size_t k = (i + 1 < h.node_count() && std::abs(h.node_time(i + 1) - t) < std::abs(h.node_time(i) - t)) ? i + 1 : i;
        out.push_back(k);
    }
    return out;
}

Outcome criterion_forest() {
    Outcome o;
    Rng rng(777);
    const std::size_t n = 64;
    const double horizon = 5.0;
    double min_a = 1.0, min_j = 1.0, excess = -1.0;
    std::size_t blowups = 0, samples = 0;
    for (int run = 0; run < 50; ++run) {
        const ForestParams p = draw_params(rng);
        Wave w = Wave::draw(rng, 0.5, 1.5, 0.4);
        w.a = std::clamp(w.a, -0.25, 0.25);
        w.d = std::clamp(w.d, -0.25, 0.25);
        const Field tau0 = Wave::draw(rng, 0.5, 1.0, 0.2).zero(n);
        const Trajectory tr = simulate(make_forest_model(p, n), w.data(n), tau0, horizon, with_dt(1e-3));
        if (tr.verdict == Verdict::BlowUp) ++blowups;
        if (tr.verdict != Verdict::ReachedHorizon) {
            o.require(false, "run " + std::to_string(run) + " verdict " + verdict_name(tr.verdict));
            continue;
        }
        for (std::size_t i = 0; i < tr.history.node_count(); ++i) min_a = std::min(min_a, kernels::min_value(tr.history.node_values(i)));
        std::vector<std::size_t> nodes;
        for (std::size_t i = 0; i < tr.history.node_count(); i += 250) nodes.push_back(i);
        if (nodes.back() != tr.history.node_count() - 1) nodes.push_back(tr.history.node_count() - 1);
        const JuvenileDiagnostics d = juvenile_diagnostics(tr.history, tr.tau, p, tr.past_step, nodes);
        min_j = std::min(min_j, d.min_juvenile);
        const ComparisonReport c = comparison_bound_check(tr.history, nodes, d.juveniles, p, 1e-6);
        excess = std::max(excess, c.max_excess);
        samples += c.samples;
    }
    o.require(min_a >= 0.0 && min_j >= 0.0, "(a) min A " + num(min_a) + ", min J " + num(min_j) + " over 50 runs");

    // (b) the balance residual at fixed times, dt halved.
    {
        ForestParams p;
        p.mu_j = 0.3;
        p.mu_a = 0.5;
        p.beta = 1.2;
        p.eps = 0.02;
        const InitialData phi(n, [n](double t, std::size_t j) {
            return 1.0 + 0.3 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / n + t);
        });
        const std::vector<double> ts{0.5, 1.0, 2.0, 3.0, 4.0, 4.9};
        auto residual = [&](double dt) {
            const Trajectory tr = simulate(make_forest_model(p, n), phi, Field(n, 0.7), horizon, with_dt(dt));
            const auto nodes = nodes_at_times(tr.history, ts);
            return juvenile_diagnostics(tr.history, tr.tau, p, tr.past_step, nodes).max_residual;
        };
        const double r1 = residual(2e-3), r2 = residual(1e-3);
        o.require(r1 / r2 >= 2.0, "(b) balance residual " + num(r1) + " -> " + num(r2) + ", ratio " + num(r1 / r2) + " >= 2");
    }
    o.require(excess <= 0.0, "(c) comparison excess " + num(excess) + " <= 0 at " + std::to_string(samples) + " samples");
    o.require(blowups == 0, "(d) " + std::to_string(blowups) + " blow-up verdicts");

    // (e) constant data against the nonspatial model.
    {
        const ForestParams p = draw_params(rng);
        const double c0 = 1.1, t0 = 0.8;
        const Trajectory a = simulate(make_forest_model(p, n), constant(n, c0), Field(n, t0), horizon, with_dt(1e-3));
        const Trajectory b = simulate(make_nonspatial_forest_model(p), constant(1, c0), Field{t0}, horizon, with_dt(1e-3));
        double dev = a.history.node_count() == b.history.node_count() ? 0.0 : 1.0;
        for (std::size_t i = 0; dev < 1.0 && i < a.history.node_count(); ++i) {
            for (const double v : a.history.node_values(i)) dev = std::max(dev, std::abs(v - b.history.node_values(i)[0]));
        }
        const double limit = 10.0 * SolverConfig{}.picard_tol;
        o.require(dev <= limit, "(e) reduction deviation " + num(dev) + " <= " + num(limit));
    }
    return o;
}

// ---------------------------------------------------------------------- 8

Outcome criterion_lip_regression() {
    Outcome o;
    const double dt = 1e-3;
    const Trajectory tr = simulate(make_unit_growth_model(1), constant(1, 0.0), Field{1.0}, 2.0, with_dt(dt));
    const HistoryFunction& h = tr.history;
    double worst = 0.0;
    for (const double t : {0.001, 0.01, 0.25, 0.5, 1.0, 1.5, 2.0}) {
        // Difference quotients of theta -> A(t + theta) - A(theta) on a grid
        // that contains every kink (multiples of dt), down to theta = -t - 1.
        double lip = 0.0;
        const long steps = std::lround((t + 1.0) / dt);
        double prev = 0.0;
        for (long k = 0; k <= steps; ++k) {
            const double theta = -static_cast<double>(k) * dt;
            const double v = h.evaluate(t + theta, 0) - h.evaluate(theta, 0);
            if (k > 0) lip = std::max(lip, std::abs(v - prev) / dt);
            prev = v;
        }
        worst = std::max(worst, std::abs(lip - 1.0));
        NormWindow w;
        w.length = t + 1.0;
        w.sample_step = dt;
        worst = std::max(worst, std::abs(weighted_lip_seminorm_difference(h, t, 0.0, w) - 1.0));
    }
    o.require(worst <= 1e-9, "max | ||A_t - A_0||_Lip - 1 | = " + num(worst) + " <= 1e-9");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "delay_equivalence", 5.0, criterion_delay},
        {2, "monotone_structure", 60.0, criterion_monotone},
        {3, "picard_contraction", 60.0, criterion_contraction},
        {4, "semigroup_restart", 120.0, criterion_semigroup},
        {5, "blow_up", 30.0, criterion_blowup},
        {6, "spatial_operator", 60.0, criterion_spatial},
        {7, "forest_model", 300.0, criterion_forest},
        {8, "lip_regression", 30.0, criterion_lip_regression},
    };
    int failed = 0;
    for (const Criterion& c : all) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        o.require(secs <= c.budget_s, "runtime " + num(secs) + " s <= " + num(c.budget_s) + " s");
        if (!o.pass) ++failed;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
