#pragma once

// Model abstraction: the right-hand side F(A(t,.), tau(t,.), A(t - tau(t))(.,.))
// together with its survival map f.

#include "sdde/field.hpp"
#include "sdde/history.hpp"
#include "sdde/survival.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sdde {

/// Arguments of F at one time: the current field, the delay field, and the
/// delayed field (x, y) -> A(t - tau(t, x), y) read from the history.
struct FieldContext {
    double t = 0.0;
    std::span<const double> current;
    std::span<const double> tau;
    const HistoryFunction* history = nullptr;

    [[nodiscard]] double delayed_time(std::size_t x) const { return t - tau[x]; }
    [[nodiscard]] double delayed(std::size_t x, std::size_t y) const {
        return history->evaluate(t - tau[x], y);
    }
    void delayed_row(std::size_t x, std::span<double> out) const {
        history->evaluate_field(t - tau[x], out);
    }
};

/// F bound to one trajectory's history. Evaluators may keep caches keyed on
/// the history's node serials, so one evaluator serves exactly one history.
class RhsEvaluator {
public:
    virtual ~RhsEvaluator() = default;
    virtual void evaluate(const FieldContext& ctx, std::span<double> out) = 0;
};

using RhsFunction = std::function<void(const FieldContext&, std::span<double>)>;
using LipschitzModulus = std::function<double(double)>;

/// One instance of the system: F, f, and optionally the Lipschitz-on-bounded-
/// sets modulus L(M') of F.
struct ModelSpec {
    using Binder =
        std::function<std::unique_ptr<RhsEvaluator>(const HistoryFunction&, double past_step)>;

    std::string name;
    std::size_t grid_size = 0;
    SurvivalMap survival = SurvivalMap::unit();
    Binder bind;
    LipschitzModulus lipschitz_modulus;

    /// Wrap a stateless right-hand side.
    static ModelSpec from_rhs(std::string name, std::size_t n, SurvivalMap f, RhsFunction rhs,
                              LipschitzModulus modulus = {});
};

/// ||F(0, 0, 0)||_inf.
[[nodiscard]] double rhs_at_zero_norm(const ModelSpec& model);

// Built-in scalar-style models (uniform across the grid).

/// F == 0.
[[nodiscard]] ModelSpec make_stationary_model(std::size_t n, SurvivalMap f = SurvivalMap::unit());
/// F == 1.
[[nodiscard]] ModelSpec make_unit_growth_model(std::size_t n, SurvivalMap f = SurvivalMap::unit());
/// F(u, v, w) = -mu u.
[[nodiscard]] ModelSpec make_decay_model(std::size_t n, double mu,
                                         SurvivalMap f = SurvivalMap::unit());
/// F(u, v, w) = u^2. Blows up in finite time for positive data.
[[nodiscard]] ModelSpec make_riccati_model(std::size_t n, SurvivalMap f = SurvivalMap::unit());
/// F(u, v, w)(x) = beta w(x, x) - mu u(x).
[[nodiscard]] ModelSpec make_delayed_growth_model(std::size_t n, double beta, double mu = 0.0,
                                                  SurvivalMap f = SurvivalMap::unit());

/// Per-species right-hand side G(x, A(t,.), tau(t,x), A(t - tau(t,x))(.)).
using SpeciesRhs = std::function<double(std::size_t x, std::span<const double> current,
                                        double tau_x, std::span<const double> delayed_row)>;

/// Affine G table: G(x) = c_x + sum_y a_xy A(t,y) + sum_y b_xy A(t - tau(t,x), y).
struct LinearSpeciesTable {
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> b;
    std::vector<double> c;
};

/// m-species model on Omega = {1..m}. Throws ValidationError when the table
/// size does not match m.
[[nodiscard]] ModelSpec make_finite_species_model(std::vector<SpeciesRhs> g, SurvivalMap f,
                                                  LipschitzModulus modulus = {});
[[nodiscard]] ModelSpec make_finite_species_model(const LinearSpeciesTable& table, SurvivalMap f);

}  // namespace sdde
