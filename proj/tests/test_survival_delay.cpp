#include "sdde/delay.hpp"
#include "sdde/errors.hpp"
#include "sdde/survival.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sdde;

namespace {

InitialData constant(std::size_t n, double v) {
    return InitialData(n, [v](double, std::size_t) { return v; });
}

HistoryFunction ramp(double t_end, double dt) {
    HistoryFunction h(constant(1, 0.0));
    const auto steps = static_cast<int>(std::llround(t_end / dt));
    for (int i = 1; i <= steps; ++i) {
        const double t = i * dt;
        const double v[1] = {t};
        h.append(t, v);
    }
    return h;
}

}  // namespace

TEST_SUITE("delay") {
    TEST_CASE("survival maps") {
        const SurvivalMap f = SurvivalMap::inverse_positive_part();
        const Field in{-1.0, 0.0, 1.0, 3.0};
        Field out(4);
        f.apply(in, out);
        CHECK(out == Field{1.0, 1.0, 0.5, 0.25});
        CHECK(f.scalar(1.0).value() == 0.5);
        CHECK(f.is_pointwise());
        const SurvivalMap m = SurvivalMap::inverse_mean();
        CHECK_FALSE(m.is_pointwise());
        Field mo(2);
        m.apply(Field{1.0, 3.0}, mo);
        CHECK(mo == Field{1.0 / 3.0, 1.0 / 3.0});
        CHECK_NOTHROW(check_survival_contract(f, 8, 1));
        CHECK_NOTHROW(check_survival_contract(SurvivalMap::exponential_decay(2.0), 8, 1));
        const SurvivalMap bad = SurvivalMap::pointwise("increasing", [](double v) { return 1.0 + std::atan(v) + 2.0; }, 5.0, 1.0);
        CHECK_THROWS_AS(check_survival_contract(bad, 8, 1), ModelError);
    }

    TEST_CASE("threshold") {
        const Field ones(3, 1.0);
        const DelayThreshold d = compute_threshold(constant(3, 7.0), ones, SurvivalMap::unit(), 1e-3);
        for (const double v : d.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

        const InitialData phi(1, [](double t, std::size_t) { return -t; });
        const DelayThreshold l = compute_threshold(phi, Field{1.0}, SurvivalMap::inverse_positive_part(), 1e-4);
        CHECK(l.values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-8));

        const DelayThreshold z = compute_threshold(phi, Field{0.0}, SurvivalMap::inverse_positive_part(), 1e-3);
        CHECK(z.values[0] == 0.0);
        CHECK_THROWS_AS((void)compute_threshold(phi, Field{-1.0}, SurvivalMap::unit(), 1e-3), ValidationError);
    }

    TEST_CASE("unit survival gives tau == delta") {
        const HistoryFunction h = ramp(3.0, 0.01);
        const DelayThreshold d{Field{1.0}};
        for (const double t : {0.0, 0.5, 2.0, 3.0}) {
            CHECK(solve_tau(h, t, d, SurvivalMap::unit(), Field{1.0}).values[0] == doctest::Approx(1.0).epsilon(1e-10));
        }
    }

    TEST_CASE("ramp closed form") {
        const double dt = 1e-3;
        const HistoryFunction h = ramp(5.0, dt);
        TauSolveOptions opt;
        opt.past_step = dt;
        opt.tol = 1e-13;
        const SurvivalMap f = SurvivalMap::inverse_positive_part();
        for (const double t : {2.0, 3.5, 5.0}) {
            const double want = (1.0 + t) * (1.0 - std::exp(-1.0));
            CHECK(std::abs(solve_tau(h, t, DelayThreshold{Field{1.0}}, f, Field{1.0}, opt).values[0] - want) < 1e-6);
        }
        // Before t - tau reaches 0, the flat phi era contributes tau - t.
        const double t = 1.0;
        const double want = 1.0 + t - std::log(2.0);
        CHECK(std::abs(solve_tau(h, t, DelayThreshold{Field{1.0}}, f, Field{1.0}, opt).values[0] - want) < 1e-6);
    }

    TEST_CASE("zero and negative thresholds") {
        const HistoryFunction h(constant(2, 1.0));
        const DelayField z = solve_tau(h, 0.0, DelayThreshold{Field(2, 0.0)}, SurvivalMap::inverse_positive_part(), {});
        CHECK(z.values == Field{0.0, 0.0});
        const DelayField n = solve_tau(h, 0.0, DelayThreshold{Field{-0.25, -1.0}}, SurvivalMap::inverse_positive_part(), {});
        CHECK(n.values[0] == doctest::Approx(-0.5));
        CHECK(n.values[1] == doctest::Approx(-2.0));
    }

    TEST_CASE("strict bracketing of the root") {
        const InitialData phi(1, [](double t, std::size_t) { return std::sin(4.0 * t); });
        const HistoryFunction h(phi);
        SurvivalIntegral q(h, SurvivalMap::inverse_positive_part(), 1e-2);
        const double tol = 1e-12;
        for (const double delta : {0.05, 0.4, 1.3}) {
            const double tau = solve_tau_point(q, 0.0, 0, delta, 1.0, tol);
            const double hh = 10.0 * tol * (1.0 + tau);
            CHECK(q.integral(-(tau - hh), 0.0, 0) < delta);
            CHECK(q.integral(-(tau + hh), 0.0, 0) > delta);
        }
    }

    TEST_CASE("lower hint does not change the root") {
        const HistoryFunction h = ramp(4.0, 1e-2);
        SurvivalIntegral q(h, SurvivalMap::inverse_positive_part(), 1e-2);
        const double plain = solve_tau_point(q, 3.0, 0, 1.0, 10.0, 1e-13);
        const double hinted = solve_tau_point(q, 3.0, 0, 1.0, 10.0, 1e-13, plain - 0.01);
        CHECK(hinted == doctest::Approx(plain).epsilon(1e-12));
        // A hint above the root is ignored.
        const double bad = solve_tau_point(q, 3.0, 0, 1.0, 10.0, 1e-13, plain + 0.5);
        CHECK(bad == doctest::Approx(plain).epsilon(1e-12));
    }

    TEST_CASE("domain error when the threshold exceeds the available mass") {
        HistoryFunction h(constant(1, 0.0));
        SurvivalIntegral q(h, SurvivalMap::unit(), 1.0, 16);
        CHECK_THROWS_AS((void)solve_tau_point(q, 0.0, 0, 100.0, 1.0, 1e-10), DomainError);
    }

    TEST_CASE("delay ODE right-hand side") {
        const HistoryFunction flat(constant(2, 3.0));
        const DelayField tau{Field{0.5, 1.0}};
        CHECK(tau_ode_rhs(flat, tau, SurvivalMap::inverse_positive_part(), 0.0).at(0) == 0.0);
        const HistoryFunction h = ramp(5.0, 1e-2);
        CHECK(tau_ode_rhs(h, DelayField{Field{1.0}}, SurvivalMap::constant(0.3), 4.0).at(0) == 0.0);
        const double t = 4.0, tv = 1.7;
        const Field r = tau_ode_rhs(h, DelayField{Field{tv}}, SurvivalMap::inverse_positive_part(), t);
        CHECK(r[0] == doctest::Approx(tv / (1.0 + t)).epsilon(1e-12));
    }

    TEST_CASE("integral and ODE forms agree, at least first order") {
        auto gap = [](double dt) {
            const HistoryFunction h = ramp(3.0, dt);
            const SurvivalMap f = SurvivalMap::inverse_positive_part();
            const auto ode = integrate_tau_ode(h, f, Field{1.0}, 3.0, dt);
            double g = 0.0;
            TauSolveOptions opt;
            opt.past_step = dt;
            opt.tol = 1e-13;
            for (std::size_t i = 0; i < ode.size(); i += 10) {
                const double t = static_cast<double>(i) * dt;
                g = std::max(g, std::abs(ode[i][0] - solve_tau(h, t, DelayThreshold{Field{1.0}}, f, Field{1.0}, opt).values[0]));
            }
            return g;
        };
        CHECK(gap(2e-3) / gap(1e-3) >= 1.8);
    }

    TEST_CASE("a priori bounds") {
        const SurvivalMap c = SurvivalMap::constant(0.4);
        const TauBounds tc = tau_bounds(Field(3, 1.3), constant(3, 2.0), c, 5.0, 1e-2);
        CHECK(tc.tau_min == doctest::Approx(1.3));
        CHECK(tc.tau_max == doctest::Approx(1.3));
        const SurvivalMap f = SurvivalMap::inverse_positive_part();
        const TauBounds b = tau_bounds(Field(2, 1.0), constant(2, 1.0), f, 1.0, 1e-2);
        CHECK(b.m1 == 1.0);
        CHECK(b.tau_min == doctest::Approx(0.5));
        CHECK(b.tau_max == doctest::Approx(2.0));
        CHECK(tau_bounds(Field(2, 0.0), constant(2, 1.0), f, 1.0, 1e-2).tau_min == 0.0);
    }

    TEST_CASE("Lipschitz estimate for constant survival") {
        const SurvivalMap c = SurvivalMap::constant(0.5);
        const TauBounds b = tau_bounds(Field(1, 1.0), constant(1, 0.0), c, 1.0, 1e-2);
        CHECK(tau_lipschitz_estimate(b, b, c, 1) >= 1.0 / 0.5);
    }

    TEST_CASE("monotone comparison") {
        const SurvivalMap f = SurvivalMap::inverse_positive_part();
        const DelayThreshold d{Field(2, 1.0)};
        CHECK(check_monotone_comparison(constant(2, 0.0), constant(2, 1.0), d, f));
        CHECK(check_monotone_comparison(constant(2, 0.5), constant(2, 0.5), d, f));
        // Explicit values: tau = delta / f(c).
        const DelayField lo = solve_tau(HistoryFunction(constant(2, 0.0)), 0.0, d, f, {});
        const DelayField hi = solve_tau(HistoryFunction(constant(2, 1.0)), 0.0, d, f, {});
        CHECK(lo.values[0] == doctest::Approx(1.0));
        CHECK(hi.values[0] == doctest::Approx(2.0));
        CHECK_THROWS_AS((void)check_monotone_comparison(constant(2, 1.0), constant(2, 0.0), d, f), OrderingError);
    }
}
