#include "sdde/verify.hpp"

#include "sdde/delay.hpp"
#include "sdde/errors.hpp"
#include "sdde/forest.hpp"
#include "sdde/history.hpp"
#include "sdde/io.hpp"
#include "sdde/kernels.hpp"
#include "sdde/model.hpp"
#include "sdde/spatial.hpp"
#include "sdde/stepper.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

namespace sdde {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Per-suite stream so "all" reproduces every suite run on its own.
Rng suite_rng(const std::string& suite, std::uint64_t seed) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char c : suite) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return Rng(seed ^ h);
}

class Collector {
public:
    explicit Collector(std::string suite) : suite_(std::move(suite)) {}

    // value <= limit passes.
    void at_most(const std::string& name, double value, double limit, std::string detail = {}) {
        add(name, std::isfinite(value) && value <= limit, value, limit, std::move(detail));
    }
    void at_least(const std::string& name, double value, double limit, std::string detail = {}) {
        add(name, std::isfinite(value) && value >= limit, value, limit, std::move(detail));
    }
    void holds(const std::string& name, bool ok, std::string detail = {}) {
        add(name, ok, ok ? 1.0 : 0.0, 1.0, std::move(detail));
    }

    // A check body that may throw: the exception becomes a failed check.
    void guarded(const std::string& name, const std::function<void()>& body) {
        try {
            body();
        } catch (const std::exception& e) {
            add(name, false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                std::string("exception: ") + e.what());
        }
    }

    std::vector<CheckResult> take() { return std::move(checks_); }

private:
    void add(const std::string& name, bool pass, double value, double limit, std::string detail) {
        checks_.push_back({suite_, name, pass, value, limit, std::move(detail)});
    }

    std::string suite_;
    std::vector<CheckResult> checks_;
};

// phi(t, x) = c + a cos(2 pi (k x + p)) + d sin(w t + q): smooth, bounded by |c| + |a| + |d|.
struct RandomData {
    double c, a, p, d, w, q;
    int k;

    static RandomData draw(Rng& rng, double c_lo, double c_hi, double amp) {
        RandomData r{};
        r.c = uniform(rng, c_lo, c_hi);
        r.a = uniform(rng, -amp, amp);
        r.p = uniform(rng, 0.0, 1.0);
        r.d = uniform(rng, -amp, amp);
        r.w = uniform(rng, 0.5, 3.0);
        r.q = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        r.k = uniform_int(rng, 0, 3);
        return r;
    }

    [[nodiscard]] double operator()(double t, double x) const {
        return c + a * std::cos(2.0 * std::numbers::pi * (k * x + p)) + d * std::sin(w * t + q);
    }

    [[nodiscard]] InitialData data(std::size_t n) const {
        const RandomData self = *this;
        const Grid g(n);
        return InitialData(n, [self, g](double t, std::size_t j) { return self(t, g.position(j)); });
    }

    [[nodiscard]] Field at_zero(std::size_t n) const {
        const Grid g(n);
        Field out(n);
        for (std::size_t j = 0; j < n; ++j) out[j] = (*this)(0.0, g.position(j));
        return out;
    }
};

InitialData constant_data(std::size_t n, double v) {
    return InitialData(n, [v](double, std::size_t) { return v; });
}

std::string fmt(double v) { return format_double(v); }

// ----------------------------------------------------------------- delay

// A(t) = t on [0, t_end] sampled every dt, phi == 0.
HistoryFunction ramp_history(double t_end, double dt) {
    HistoryFunction h(constant_data(1, 0.0));
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double v[1] = {t};
        h.append(t, v);
    }
    return h;
}

// Closed-form delay on the ramp with delta == 1.
double ramp_tau(double t) {
    const double e = std::numbers::e;
    return t < e - 1.0 ? 1.0 + t - std::log1p(t) : (1.0 + t) * (1.0 - 1.0 / e);
}

// max |tau_ode - tau_root| over [0, t_end] on the ramp with substep dt.
double ramp_ode_gap(double t_end, double dt) {
    const HistoryFunction h = ramp_history(t_end, dt);
    const SurvivalMap f = SurvivalMap::inverse_positive_part();
    const Field tau0{1.0};
    const std::vector<Field> ode = integrate_tau_ode(h, f, tau0, t_end, dt);
    SurvivalIntegral q(h, f, dt);
    double gap = 0.0;
    double prev = 1.0;
    for (std::size_t i = 0; i < ode.size(); ++i) {
        const double t = static_cast<double>(i) * dt;
        const double r = solve_tau_point(q, t, 0, 1.0, (prev + dt) * (1.0 + 1e-9) + 1e-12, 1e-13);
        gap = std::max(gap, std::abs(ode[i][0] - r));
        prev = r;
    }
    return gap;
}

void delay_suite(Collector& out, Rng& rng) {
    const SurvivalMap inv = SurvivalMap::inverse_positive_part();

    out.guarded("threshold_unit", [&] {
        const Field tau0(4, 1.0);
        const DelayThreshold d = compute_threshold(constant_data(4, 0.3), tau0, SurvivalMap::unit(), 1e-3);
        double err = 0.0;
        for (const double v : d.values) err = std::max(err, std::abs(v - 1.0));
        out.at_most("threshold_unit", err, 1e-14);
    });

    out.guarded("threshold_log2", [&] {
        const InitialData phi(1, [](double t, std::size_t) { return -t; });
        const Field tau0{1.0};
        const DelayThreshold d = compute_threshold(phi, tau0, inv, 1e-4);
        out.at_most("threshold_log2", std::abs(d.values[0] - std::log(2.0)), 1e-8);
    });

    out.guarded("zero_threshold", [&] {
        const HistoryFunction h(constant_data(3, 0.5));
        const DelayThreshold d{Field(3, 0.0)};
        const DelayField tau = solve_tau(h, 0.0, d, inv, {});
        out.at_most("zero_threshold", kernels::max_abs(tau.values), 0.0);
    });

    out.guarded("negative_branch", [&] {
        const HistoryFunction h(constant_data(1, 1.0));
        const DelayThreshold d{Field{-0.5}};
        const DelayField tau = solve_tau(h, 0.0, d, inv, {});
        out.at_most("negative_branch", std::abs(tau.values[0] - (-0.5 / 0.5)), 1e-15);
    });

    out.guarded("ramp_closed_form", [&] {
        const double dt = 1e-3;
        const HistoryFunction h = ramp_history(5.0, dt);
        const DelayThreshold d{Field{1.0}};
        TauSolveOptions opt;
        opt.tol = 1e-13;
        opt.past_step = dt;
        const Field tau0{1.0};
        double err = 0.0;
        for (int i = 0; i <= 40; ++i) {
            const double t = 1.0 + 0.1 * i;
            err = std::max(err, std::abs(solve_tau(h, t, d, inv, tau0, opt).values[0] - ramp_tau(t)));
        }
        out.at_most("ramp_closed_form", err, 1e-6, "t in [1,5], dt=1e-3");
    });

    out.guarded("ode_equivalence_order", [&] {
        const double g1 = ramp_ode_gap(5.0, 2e-3);
        const double g2 = ramp_ode_gap(5.0, 1e-3);
        out.at_least("ode_equivalence_order", g1 / g2, 1.8, "gap " + fmt(g1) + " -> " + fmt(g2));
    });

    out.guarded("strict_bracketing", [&] {
        double worst = 0.0;
        bool ok = true;
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t n = 4;
            const RandomData r = RandomData::draw(rng, -1.0, 2.0, 1.0);
            const InitialData phi = r.data(n);
            HistoryFunction h(phi);
            SurvivalIntegral q(h, inv, 1e-2);
            const double delta = uniform(rng, 0.05, 0.9);
            for (std::size_t j = 0; j < n; ++j) {
                const double tol = 1e-12;
                const double tau = solve_tau_point(q, 0.0, j, delta, 1.0, tol);
                const double hh = 10.0 * tol * (1.0 + tau);
                const double below = q.integral(-(tau - hh), 0.0, j) - delta;
                const double above = q.integral(-(tau + hh), 0.0, j) - delta;
                if (!(below < 0.0 && above > 0.0)) ok = false;
                worst = std::max(worst, std::abs(q.integral(-tau, 0.0, j) - delta) / delta);
            }
        }
        out.holds("strict_bracketing", ok, "max relative residual " + fmt(worst));
    });

    out.guarded("monotone_and_bounds", [&] {
        double worst_drop = 0.0;
        double worst_bound = 0.0;
        std::size_t runs = 0;
        for (int trial = 0; trial < 12; ++trial) {
            const std::size_t n = 4;
            const RandomData r = RandomData::draw(rng, -0.5, 1.5, 0.5);
            const InitialData phi = r.data(n);
            const RandomData rt = RandomData::draw(rng, 0.6, 1.2, 0.3);
            const Field tau0 = rt.at_zero(n);
            const double mu = uniform(rng, 0.2, 2.0);
            SolverConfig cfg;
            cfg.dt = 1e-2;
            const ModelSpec m = make_decay_model(n, mu, inv);
            const Trajectory tr = simulate(m, phi, tau0, 2.0, cfg);
            if (tr.verdict != Verdict::ReachedHorizon) throw DomainError("trajectory ended early: " + tr.message);
            ++runs;
            const auto& times = tr.history.times();
            for (std::size_t i = 1; i < times.size(); ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double lag0 = times[i - 1] - tr.tau[i - 1][j];
                    const double lag1 = times[i] - tr.tau[i][j];
                    const double allow = 10.0 * cfg.tau_tol * (1.0 + tr.tau[i][j]);
                    worst_drop = std::max(worst_drop, (lag0 - lag1) - allow);
                }
            }
            const TauBounds b = tau_bounds(tau0, phi, inv, tr.max_sup_norm, 1e-3);
            for (const Field& tau : tr.tau) {
                for (const double v : tau) {
                    const double slack = 1e-9 * (1.0 + v);
                    worst_bound = std::max(worst_bound, std::max(b.tau_min - v, v - b.tau_max) - slack);
                }
            }
        }
        out.at_most("lag_non_decreasing", worst_drop, 0.0, std::to_string(runs) + " trajectories");
        out.at_most("tau_a_priori_bounds", worst_bound, 0.0, std::to_string(runs) + " trajectories");
    });

    out.guarded("ordered_comparison", [&] {
        std::size_t fails = 0;
        const int pairs = 200;
        for (int trial = 0; trial < pairs; ++trial) {
            const std::size_t n = 6;
            const RandomData r = RandomData::draw(rng, -1.0, 1.0, 0.7);
            const RandomData bump = RandomData::draw(rng, 0.0, 1.0, 0.0);
            const double lift = uniform(rng, 0.0, 1.0);
            const InitialData lo = r.data(n);
            const InitialData hi(n, [r, bump, lift, n](double t, std::size_t j) {
                const double x = Grid(n).position(j);
                return r(t, x) + lift * (1.0 + std::cos(bump.w * t + bump.q + 2.0 * std::numbers::pi * x));
            });
            Field dv(n);
            for (auto& v : dv) v = uniform(rng, 0.05, 0.8);
            if (!check_monotone_comparison(lo, hi, DelayThreshold{dv}, inv)) ++fails;
        }
        out.at_most("ordered_comparison", static_cast<double>(fails), 0.0, std::to_string(pairs) + " ordered pairs");
    });

    out.guarded("lipschitz_estimate", [&] {
        double worst = 0.0;
        for (int trial = 0; trial < 8; ++trial) {
            const std::size_t n = 4;
            const RandomData ra = RandomData::draw(rng, 0.0, 1.0, 0.4);
            const RandomData rb = RandomData::draw(rng, 0.0, 1.0, 0.4);
            const RandomData ta = RandomData::draw(rng, 0.6, 1.0, 0.2);
            const RandomData tb = RandomData::draw(rng, 0.6, 1.0, 0.2);
            const InitialData pa = ra.data(n), pb = rb.data(n);
            const Field t0a = ta.at_zero(n), t0b = tb.at_zero(n);
            const ModelSpec m = make_decay_model(n, 1.0, inv);
            SolverConfig cfg;
            cfg.dt = 1e-2;
            const Trajectory a = simulate(m, pa, t0a, 1.0, cfg);
            const Trajectory b = simulate(m, pb, t0b, 1.0, cfg);
            const TauBounds ba = tau_bounds(t0a, pa, inv, a.max_sup_norm, 1e-3);
            const TauBounds bb = tau_bounds(t0b, pb, inv, b.max_sup_norm, 1e-3);
            const double lt = tau_lipschitz_estimate(ba, bb, inv, n);
            double dd = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                dd = std::max(dd, std::abs(a.threshold.values[j] - b.threshold.values[j]));
            }
            // sup |A - A~| over (-tau_max, t], phi era sampled.
            const double back = std::max(ba.tau_max, bb.tau_max);
            double sup = 0.0;
            for (double s = -back; s < 0.0; s += 1e-2) {
                const Field fa = pa.sample(s), fb = pb.sample(s);
                sup = std::max(sup, kernels::max_abs_diff(fa, fb));
            }
            const std::size_t nodes = std::min(a.history.node_count(), b.history.node_count());
            for (std::size_t i = 0; i < nodes; ++i) {
                sup = std::max(sup, kernels::max_abs_diff(a.history.node_values(i), b.history.node_values(i)));
                const double lhs = kernels::max_abs_diff(a.tau[i], b.tau[i]);
                const double rhs = lt * (sup + dd);
                if (rhs > 0.0) worst = std::max(worst, lhs / rhs);
            }
        }
        out.at_most("lipschitz_estimate", worst, 1.0, "max lhs / (L_tau * rhs)");
    });
}

// --------------------------------------------------------------- stepper

double decay_error(double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    const Trajectory tr = simulate(make_decay_model(1, 1.0), constant_data(1, 1.0), Field{1.0}, 1.0, cfg);
    return std::abs(tr.final_values()[0] - std::exp(-1.0));
}

double decay_midpoint_residual(double dt) {
    SolverConfig cfg;
    cfg.dt = dt;
    const ModelSpec m = make_decay_model(1, 1.0, SurvivalMap::inverse_positive_part());
    const Trajectory tr = simulate(m, constant_data(1, 1.0), Field{0.5}, 1.0, cfg);
    std::vector<double> ts;
    for (int k = 1; k <= 10; ++k) ts.push_back((static_cast<double>(k) - 0.5) * 0.1);
    return verify_solution_residual(tr, m, ts).max();
}

void stepper_suite(Collector& out, Rng& rng) {
    out.guarded("unit_growth", [&] {
        SolverConfig cfg;
        cfg.dt = 1e-2;
        const Trajectory tr = simulate(make_unit_growth_model(3), constant_data(3, 0.0), Field(3, 1.0), 2.0, cfg);
        double err = 0.0;
        for (const double v : tr.final_values()) err = std::max(err, std::abs(v - 2.0));
        out.at_most("unit_growth", err, 1e-12, std::string("verdict ") + verdict_name(tr.verdict));
    });

    out.guarded("stationary", [&] {
        const RandomData r = RandomData::draw(rng, -1.0, 1.0, 0.5);
        SolverConfig cfg;
        cfg.dt = 1e-2;
        const Trajectory tr = simulate(make_stationary_model(5), r.data(5), Field(5, 1.0), 1.0, cfg);
        const Field a0 = r.at_zero(5);
        out.at_most("stationary", kernels::max_abs_diff(tr.final_values(), a0), 0.0);
    });

    out.guarded("lip_counterexample", [&] {
        SolverConfig cfg;
        cfg.dt = 1e-2;
        const Trajectory tr = simulate(make_unit_growth_model(1), constant_data(1, 0.0), Field{1.0}, 2.0, cfg);
        NormWindow w;
        w.alpha = 0.0;
        w.length = 4.0;
        w.sample_step = 1e-2;
        double worst = 0.0;
        for (const double t : {0.25, 0.5, 1.0, 1.5, 2.0}) {
            worst = std::max(worst, std::abs(weighted_lip_seminorm_difference(tr.history, t, 0.0, w) - 1.0));
        }
        out.at_most("lip_counterexample", worst, 1e-9);
    });

    out.guarded("decay_second_order", [&] {
        const double e1 = decay_error(1e-2), e2 = decay_error(5e-3);
        out.at_least("decay_second_order", e1 / e2, 3.0, "error " + fmt(e1) + " -> " + fmt(e2));
    });

    out.guarded("residual_order", [&] {
        const double r1 = decay_midpoint_residual(1e-2), r2 = decay_midpoint_residual(5e-3);
        out.at_least("residual_order", r1 / r2, 2.0, "residual " + fmt(r1) + " -> " + fmt(r2));
    });

    out.guarded("riccati_blowup", [&] {
        SolverConfig cfg;
        cfg.dt = 1e-3;
        cfg.blowup_threshold = 1e3;
        const Trajectory tr =
            simulate(make_riccati_model(1), constant_data(1, 1.0), Field{1.0}, 2.0, cfg);
        const bool blew = tr.verdict == Verdict::BlowUp;
        out.at_most("riccati_blowup", blew ? std::abs(tr.t_bu - 1.0) : 1.0, 0.05,
                    std::string("verdict ") + verdict_name(tr.verdict));
    });

    out.guarded("restart", [&] {
        SolverConfig cfg;
        cfg.dt = 1e-2;
        const RandomData r = RandomData::draw(rng, 0.5, 1.5, 0.3);
        const RestartDeviation d =
            restart_and_compare(make_decay_model(4, 0.7, SurvivalMap::inverse_positive_part()), r.data(4),
                                Field(4, 0.8), 0.5, 1.0, cfg);
        out.at_most("restart", d.max(), 10.0 * cfg.picard_tol);
    });

    out.guarded("picard_contraction", [&] {
        SolverConfig cfg;
        cfg.dt = 5e-2;
        cfg.use_radius = true;
        const Trajectory tr = simulate(make_decay_model(2, 1.0, SurvivalMap::inverse_positive_part()),
                                       constant_data(2, 1.0), Field(2, 1.0), 2.0, cfg);
        std::size_t good = 0;
        for (const WindowRecord& w : tr.windows) {
            if (w.max_ratio <= 0.5) ++good;
        }
        const double frac = tr.windows.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(tr.windows.size());
        out.at_least("picard_contraction", frac, 0.95,
                     "dt " + fmt(tr.initial_dt) + ", windows " + std::to_string(tr.windows.size()));
    });

    out.guarded("kernel_backends", [&] {
        using namespace kernels;
        const std::size_t n = 37;
        std::vector<double> a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = uniform(rng, -2.0, 2.0);
            b[i] = uniform(rng, -2.0, 2.0);
            c[i] = uniform(rng, -2.0, 2.0);
        }
        const KernelTable& ref = scalar_table();
        bool same = true;
        for (const Backend be : {Backend::Avx2, Backend::Neon}) {
            if (!backend_supported(be)) continue;
            const KernelTable& k = table_for(be);
            std::vector<double> o1(n), o2(n);
            ref.trapezoid_accumulate(a.data(), 0.3, b.data(), c.data(), o1.data(), n);
            k.trapezoid_accumulate(a.data(), 0.3, b.data(), c.data(), o2.data(), n);
            same = same && o1 == o2;
            ref.lerp(a.data(), b.data(), 0.37, o1.data(), n);
            k.lerp(a.data(), b.data(), 0.37, o2.data(), n);
            same = same && o1 == o2;
            same = same && ref.max_abs_diff(a.data(), b.data(), n) == k.max_abs_diff(a.data(), b.data(), n);
            same = same && ref.min_value(a.data(), n) == k.min_value(a.data(), n);
        }
        out.holds("kernel_backends", same, std::string("active ") + std::string(backend_name(active_backend())));
    });
}

// --------------------------------------------------------------- spatial

// I - eps Lap_h, assembled directly.
Eigen::MatrixXd helmholtz_matrix(double eps, std::size_t n) {
    const double h2 = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        m(r, r) += 2.0 * eps / h2;
        m(r, static_cast<Eigen::Index>((i + 1) % n)) -= eps / h2;
        m(r, static_cast<Eigen::Index>((i + n - 1) % n)) -= eps / h2;
    }
    return m;
}

void spatial_suite(Collector& out, Rng& rng) {
    const std::size_t n = 128;
    double min_pos = std::numeric_limits<double>::infinity();
    double sup_excess = -std::numeric_limits<double>::infinity();
    double mean_err = 0.0;
    const int fields = 200;
    for (int trial = 0; trial < fields; ++trial) {
        const ResolventOperator op(uniform(rng, 0.0, 0.05), n);
        Field g(n);
        for (auto& v : g) v = uniform(rng, 0.0, 1.0);
        Field u = op.apply(g);
        min_pos = std::min(min_pos, kernels::min_value(u));
        for (auto& v : g) v = uniform(rng, -1.0, 1.0);
        u = op.apply(g);
        sup_excess = std::max(sup_excess, kernels::max_abs(u) - kernels::max_abs(g));
        double mg = 0.0, mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            mg += g[j];
            mu += u[j];
        }
        mean_err = std::max(mean_err, std::abs(mg - mu) / static_cast<double>(n));
    }
    out.at_least("positivity", min_pos, 0.0, std::to_string(fields) + " fields, N=128");
    out.at_most("sup_norm", sup_excess, 1e-15);
    out.at_most("mean", mean_err, 1e-12);

    out.guarded("dense_oracle", [&] {
        double worst = 0.0;
        for (const std::size_t m : {8, 33, 128, 256}) {
            const double eps = uniform(rng, 1e-4, 0.05);
            const ResolventOperator op(eps, m);
            Eigen::VectorXd g(static_cast<Eigen::Index>(m));
            for (Eigen::Index j = 0; j < g.size(); ++j) g(j) = uniform(rng, -1.0, 1.0);
            const Eigen::VectorXd ref = helmholtz_matrix(eps, m).partialPivLu().solve(g);
            const Field u = op.apply(std::span<const double>(g.data(), m));
            for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(u[j] - ref(static_cast<Eigen::Index>(j))));
        }
        out.at_most("dense_oracle", worst, 1e-12, "N in {8,33,128,256}");
    });

    out.guarded("fourier_mode", [&] {
        const std::size_t m = 64;
        const double eps = 0.01;
        const ResolventOperator op(eps, m);
        const Grid grid(m);
        double worst = 0.0;
        for (int k = 0; k <= 5; ++k) {
            Field g(m);
            for (std::size_t j = 0; j < m; ++j) g[j] = std::cos(2.0 * std::numbers::pi * k * grid.position(j));
            const double lam = (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / static_cast<double>(m))) *
                               static_cast<double>(m * m);
            const Field u = op.apply(g);
            for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(u[j] - g[j] / (1.0 + eps * lam)));
        }
        out.at_most("fourier_mode", worst, 1e-13);
    });

    out.guarded("identity_at_zero_eps", [&] {
        const ResolventOperator op(0.0, 50);
        Field g(50);
        for (auto& v : g) v = uniform(rng, -3.0, 3.0);
        out.at_most("identity_at_zero_eps", kernels::max_abs_diff(op.apply(g), g), 0.0);
    });

    out.guarded("matrix_rows", [&] {
        const Eigen::MatrixXd r = resolvent_matrix(ResolventOperator(0.02, 40));
        const double row_err = (r.rowwise().sum().array() - 1.0).abs().maxCoeff();
        out.at_most("matrix_row_sums", row_err, 1e-12);
        out.at_least("matrix_nonnegative", r.minCoeff(), 0.0);
    });
}

// ---------------------------------------------------------------- forest

struct ForestRun {
    ForestParams p;
    Trajectory traj;
    JuvenileDiagnostics diag;
};

ForestParams random_params(Rng& rng) {
    ForestParams p;
    p.mu_j = uniform(rng, 0.0, 1.0);
    p.mu_a = uniform(rng, 0.1, 1.0);
    p.beta = uniform(rng, 0.2, 1.5);
    p.eps = uniform(rng, 0.0, 0.05);
    return p;
}

std::vector<std::size_t> every_node(const HistoryFunction& h, std::size_t stride) {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 0; i < h.node_count(); i += stride) nodes.push_back(i);
    if (nodes.back() != h.node_count() - 1) nodes.push_back(h.node_count() - 1);
    return nodes;
}

// Node indices whose times match the targets exactly (uniform steps assumed).
std::vector<std::size_t> nodes_at(const HistoryFunction& h, std::span<const double> targets) {
    std::vector<std::size_t> out;
    const auto& times = h.times();
    for (const double t : targets) {
        const auto it = std::lower_bound(times.begin(), times.end(), t - 1e-12);
        if (it == times.end() || std::abs(*it - t) > 1e-9) throw DomainError("no node at t=" + fmt(t));
        out.push_back(static_cast<std::size_t>(it - times.begin()));
    }
    return out;
}

double balance_at(const ForestParams& p, const InitialData& phi, const Field& tau0, double dt,
                  std::span<const double> targets) {
    SolverConfig cfg;
    cfg.dt = dt;
    const Trajectory tr = simulate(make_forest_model(p, phi.grid_size()), phi, tau0, targets.back() + 0.1, cfg);
    if (tr.verdict != Verdict::ReachedHorizon) throw DomainError("forest run ended early: " + tr.message);
    const std::vector<std::size_t> nodes = nodes_at(tr.history, targets);
    return juvenile_diagnostics(tr.history, tr.tau, p, tr.past_step, nodes).max_residual;
}

void forest_suite(Collector& out, Rng& rng) {
    const std::size_t n = 16;
    const double horizon = 2.0;

    out.guarded("positivity_and_comparison", [&] {
        double min_a = std::numeric_limits<double>::infinity();
        double min_j = std::numeric_limits<double>::infinity();
        double excess = -std::numeric_limits<double>::infinity();
        bool no_blowup = true;
        const int runs = 5;
        for (int trial = 0; trial < runs; ++trial) {
            const ForestParams p = random_params(rng);
            RandomData r = RandomData::draw(rng, 0.5, 1.5, 0.4);
            r.a = std::clamp(r.a, -0.25, 0.25);
            r.d = std::clamp(r.d, -0.25, 0.25);
            const InitialData phi = r.data(n);
            const Field tau0 = RandomData::draw(rng, 0.5, 1.0, 0.2).at_zero(n);
            SolverConfig cfg;
            cfg.dt = 1e-2;
            const Trajectory tr = simulate(make_forest_model(p, n), phi, tau0, horizon, cfg);
            if (tr.verdict == Verdict::BlowUp) no_blowup = false;
            for (std::size_t i = 0; i < tr.history.node_count(); ++i) {
                min_a = std::min(min_a, kernels::min_value(tr.history.node_values(i)));
            }
            const std::vector<std::size_t> nodes = every_node(tr.history, 10);
            const JuvenileDiagnostics d = juvenile_diagnostics(tr.history, tr.tau, p, tr.past_step, nodes);
            min_j = std::min(min_j, d.min_juvenile);
            const ComparisonReport c = comparison_bound_check(tr.history, nodes, d.juveniles, p, 1e-6);
            excess = std::max(excess, c.max_excess);
        }
        out.at_least("adult_positivity", min_a, 0.0, std::to_string(runs) + " runs");
        out.at_least("juvenile_positivity", min_j, 0.0);
        out.at_most("comparison_bound", excess, 0.0);
        out.holds("no_blowup", no_blowup);
    });

    out.guarded("balance_order", [&] {
        const ForestParams p = random_params(rng);
        const RandomData r = RandomData::draw(rng, 0.8, 1.2, 0.2);
        const Field tau0(n, 0.7);
        const std::vector<double> targets = {0.4, 0.8, 1.2, 1.6};
        const double r1 = balance_at(p, r.data(n), tau0, 2e-2, targets);
        const double r2 = balance_at(p, r.data(n), tau0, 1e-2, targets);
        out.at_least("balance_order", r1 / r2, 2.0, "residual " + fmt(r1) + " -> " + fmt(r2));
    });

    out.guarded("nonspatial_reduction", [&] {
        const ForestParams p = random_params(rng);
        const double c = uniform(rng, 0.5, 1.5);
        const double t0 = uniform(rng, 0.5, 1.0);
        SolverConfig cfg;
        cfg.dt = 1e-2;
        const Trajectory a = simulate(make_forest_model(p, n), constant_data(n, c), Field(n, t0), horizon, cfg);
        const Trajectory b = simulate(make_nonspatial_forest_model(p), constant_data(1, c), Field{t0}, horizon, cfg);
        double dev = a.history.node_count() == b.history.node_count() ? 0.0 : 1.0;
        for (std::size_t i = 0; dev < 1.0 && i < a.history.node_count(); ++i) {
            for (const double v : a.history.node_values(i)) dev = std::max(dev, std::abs(v - b.history.node_values(i)[0]));
            for (const double v : a.tau[i]) dev = std::max(dev, std::abs(v - b.tau[i][0]));
        }
        out.at_most("nonspatial_reduction", dev, 10.0 * cfg.picard_tol);
    });

    out.guarded("restart", [&] {
        const ForestParams p = random_params(rng);
        const RandomData r = RandomData::draw(rng, 0.8, 1.2, 0.2);
        SolverConfig cfg;
        cfg.dt = 1e-2;
        const RestartDeviation d = restart_and_compare(make_forest_model(p, n), r.data(n), Field(n, 0.7), 0.5, 1.0, cfg);
        out.at_most("restart", d.max(), 10.0 * cfg.picard_tol);
    });
}

using SuiteFn = void (*)(Collector&, Rng&);

struct SuiteEntry {
    const char* name;
    SuiteFn fn;
};

constexpr SuiteEntry kSuites[] = {
    {"delay", delay_suite},
    {"stepper", stepper_suite},
    {"spatial", spatial_suite},
    {"forest", forest_suite},
};

}  // namespace

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& s : kSuites) v.emplace_back(s.name);
        v.emplace_back("all");
        return v;
    }();
    return names;
}

VerifyReport run_suite(const std::string& suite, std::uint64_t seed) {
    VerifyReport rep;
    rep.suite = suite;
    rep.seed = seed;
    bool known = false;
    for (const auto& s : kSuites) {
        if (suite != "all" && suite != s.name) continue;
        known = true;
        Collector c(s.name);
        Rng rng = suite_rng(s.name, seed);
        s.fn(c, rng);
        for (auto& r : c.take()) rep.checks.push_back(std::move(r));
    }
    if (!known) throw ValidationError("unknown suite '" + suite + "' (expected delay, stepper, spatial, forest or all)");
    return rep;
}

std::string report_json(const VerifyReport& report) {
    auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("null"); };
    auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
    std::ostringstream os;
    os << "{\n  \"suite\": " << str(report.suite) << ",\n  \"seed\": " << report.seed
       << ",\n  \"passed\": " << (report.passed() ? "true" : "false") << ",\n  \"checks\": [";
    for (std::size_t i = 0; i < report.checks.size(); ++i) {
        const CheckResult& c = report.checks[i];
        os << (i ? ",\n" : "\n") << "    {\"suite\": " << str(c.suite) << ", \"name\": " << str(c.name)
           << ", \"pass\": " << (c.pass ? "true" : "false") << ", \"value\": " << num(c.value)
           << ", \"limit\": " << num(c.limit) << ", \"detail\": " << str(c.detail) << "}";
    }
    os << (report.checks.empty() ? "]\n}\n" : "\n  ]\n}\n");
    return os.str();
}

}  // namespace sdde
