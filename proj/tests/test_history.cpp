#include "sdde/errors.hpp"
#include "sdde/history.hpp"

#include <doctest.h>

#include <cmath>

using namespace sdde;

namespace {

InitialData constant(std::size_t n, double v) {
    return InitialData(n, [v](double, std::size_t) { return v; });
}

// phi == 0 and A(t) = t on [0, t_end] with nodes every dt.
HistoryFunction ramp(double t_end, double dt) {
    HistoryFunction h(constant(2, 0.0));
    for (int i = 1; i * dt <= t_end + 1e-12; ++i) {
        const double t = i * dt;
        const double v[2] = {t, t};
        h.append(t, v);
    }
    return h;
}

}  // namespace

TEST_SUITE("history") {
    TEST_CASE("node 0 is phi(0) and nodes evaluate exactly") {
        const InitialData phi(3, [](double t, std::size_t j) { return 1.0 + t + 0.1 * static_cast<double>(j); });
        HistoryFunction h(phi);
        CHECK(h.node_count() == 1);
        CHECK(h.node_values(0)[2] == 1.2);
        const double v[3] = {0.3, 0.7, -0.1};
        h.append(0.1, v);
        CHECK(h.evaluate(0.1, 1) == 0.7);
        CHECK(h.evaluate(-0.5, 0) == 0.5);
    }

    TEST_CASE("linear interpolation between nodes") {
        HistoryFunction h(constant(1, 0.0));
        const double one[1] = {1.0};
        h.append(1.0, one);
        CHECK(h.evaluate(0.25, 0) == doctest::Approx(0.25));
    }

    TEST_CASE("unit growth solution evaluates to t") {
        const HistoryFunction h = ramp(1.0, 0.125);
        CHECK(h.evaluate(0.5, 0) == 0.5);
        CHECK(h.evaluate(0.3, 1) == doctest::Approx(0.3).epsilon(1e-15));
    }

    TEST_CASE("append only, strictly increasing, right size") {
        HistoryFunction h = ramp(1.0, 0.25);
        const double before = h.evaluate(0.6, 0);
        const double v[2] = {9.0, 9.0};
        h.append(2.0, v);
        CHECK(h.evaluate(0.6, 0) == before);
        CHECK_THROWS_AS(h.append(2.0, v), ValidationError);
        const double w[1] = {0.0};
        CHECK_THROWS_AS(h.append(3.0, w), ValidationError);
        CHECK_THROWS_AS((void)h.evaluate(2.5, 0), HistoryOverrun);
    }

    TEST_CASE("pop_back never removes node 0 and serials are fresh") {
        HistoryFunction h(constant(1, 2.0));
        const double v[1] = {1.0};
        h.append(1.0, v);
        const auto s1 = h.node_serial(1);
        h.pop_back();
        h.append(1.0, v);
        CHECK(h.node_serial(1) != s1);
        h.pop_back();
        CHECK_THROWS((h.pop_back()));
    }

    TEST_CASE("cell_index") {
        const HistoryFunction h = ramp(1.0, 0.25);
        CHECK(h.cell_index(0.0) == 0);
        CHECK(h.cell_index(0.3) == 1);
        CHECK(h.cell_index(0.5) == 2);
        CHECK(h.cell_index(1.0) == 4);
    }

    TEST_CASE("rebase") {
        const HistoryFunction h = ramp(2.0, 0.25);
        const HistoryFunction r0 = h.rebase(0.0);
        CHECK(r0.evaluate(-0.3, 0) == h.evaluate(-0.3, 0));
        const HistoryFunction r1 = h.rebase(1.0);
        CHECK(r1.current_time() == 0.0);
        CHECK(r1.evaluate(-0.5, 0) == doctest::Approx(0.5));
        // Two shifts compose.
        const HistoryFunction a = h.rebase(1.5);
        HistoryFunction partial = h.rebase(1.0);
        // Extend the rebased history by the parent's next values to shift again.
        for (double t = 0.25; t <= 0.5 + 1e-12; t += 0.25) {
            const double v[2] = {h.evaluate(1.0 + t, 0), h.evaluate(1.0 + t, 1)};
            partial.append(t, v);
        }
        const HistoryFunction b = partial.rebase(0.5);
        for (double th = -3.0; th <= 0.0; th += 0.125) CHECK(a.evaluate(th, 1) == doctest::Approx(b.evaluate(th, 1)));
        CHECK_THROWS_AS((void)h.rebase(2.5), DomainError);
        CHECK_THROWS_AS((void)h.rebase(-0.1), DomainError);
    }

    TEST_CASE("weighted sup norm") {
        NormWindow w;
        w.length = 5.0;
        w.sample_step = 1e-3;
        for (const double alpha : {0.0, 0.5, 2.0}) {
            w.alpha = alpha;
            CHECK(weighted_sup_norm(HistoryFunction(constant(3, -1.5)), w) == doctest::Approx(1.5));
            CHECK(weighted_sup_norm(HistoryFunction(constant(3, 0.0)), w) == 0.0);
            const InitialData grow(1, [alpha](double t, std::size_t) { return std::exp(alpha * std::abs(t)); });
            CHECK(weighted_sup_norm(HistoryFunction(grow), w) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("Lipschitz seminorm") {
        NormWindow w;
        w.length = 4.0;
        w.sample_step = 1e-2;
        const InitialData line(2, [](double t, std::size_t) { return -3.0 * t; });
        CHECK(weighted_lip_seminorm(HistoryFunction(line), w) == doctest::Approx(3.0));
        CHECK(weighted_lip_seminorm(HistoryFunction(constant(2, 4.0)), w) == 0.0);
        const InitialData wave(1, [](double t, std::size_t) { return std::sin(3.0 * t) + 0.2 * t * t; });
        const HistoryFunction hw(wave);
        const double whole = lip_seminorm_on(hw, -2.0, 0.0, 1e-3);
        const double left = lip_seminorm_on(hw, -2.0, -0.7, 1e-3);
        const double right = lip_seminorm_on(hw, -0.7, 0.0, 1e-3);
        CHECK(whole <= left + right + 1e-12);
    }

    TEST_CASE("Lipschitz distance of the unit-growth solution to its start") {
        const HistoryFunction h = ramp(2.0, 0.01);
        NormWindow w;
        w.length = 4.0;
        w.sample_step = 1e-2;
        for (const double t : {0.01, 0.5, 2.0}) {
            CHECK(weighted_lip_seminorm_difference(h, t, 0.0, w) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}
