#include "sdde/model.hpp"

#include "sdde/errors.hpp"
#include "sdde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdde {
namespace {

class StatelessEvaluator final : public RhsEvaluator {
public:
    explicit StatelessEvaluator(std::shared_ptr<const RhsFunction> rhs) : rhs_(std::move(rhs)) {}
    void evaluate(const FieldContext& ctx, std::span<double> out) override { (*rhs_)(ctx, out); }

private:
    std::shared_ptr<const RhsFunction> rhs_;
};

}  // namespace

ModelSpec ModelSpec::from_rhs(std::string name, std::size_t n, SurvivalMap f, RhsFunction rhs,
                              LipschitzModulus modulus) {
    if (n == 0) throw ValidationError("model grid must be non-empty");
    if (!rhs) throw ValidationError("model right-hand side is empty");
    auto shared = std::make_shared<const RhsFunction>(std::move(rhs));
    ModelSpec m;
    m.name = std::move(name);
    m.grid_size = n;
    m.survival = std::move(f);
    m.bind = [shared](const HistoryFunction&, double) {
        return std::make_unique<StatelessEvaluator>(shared);
    };
    m.lipschitz_modulus = std::move(modulus);
    return m;
}

double rhs_at_zero_norm(const ModelSpec& model) {
    const std::size_t n = model.grid_size;
    const HistoryFunction zero(InitialData(n, [](double, std::size_t) { return 0.0; }, "zero"));
    auto eval = model.bind(zero, 1.0);
    const Field a(n, 0.0), tau(n, 0.0);
    Field out(n);
    FieldContext ctx{0.0, a, tau, &zero};
    eval->evaluate(ctx, out);
    return kernels::max_abs(out);
}

ModelSpec make_stationary_model(std::size_t n, SurvivalMap f) {
    return ModelSpec::from_rhs(
        "stationary", n, std::move(f),
        [](const FieldContext&, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); },
        [](double) { return 0.0; });
}

ModelSpec make_unit_growth_model(std::size_t n, SurvivalMap f) {
    return ModelSpec::from_rhs(
        "unit_growth", n, std::move(f),
        [](const FieldContext&, std::span<double> out) { std::fill(out.begin(), out.end(), 1.0); },
        [](double) { return 0.0; });
}

ModelSpec make_decay_model(std::size_t n, double mu, SurvivalMap f) {
    if (!(mu >= 0.0)) throw ValidationError("decay rate must be >= 0");
    return ModelSpec::from_rhs(
        "decay", n, std::move(f),
        [mu](const FieldContext& ctx, std::span<double> out) {
            kernels::scale(-mu, ctx.current, out);
        },
        [mu](double) { return mu; });
}

ModelSpec make_riccati_model(std::size_t n, SurvivalMap f) {
    return ModelSpec::from_rhs(
        "riccati", n, std::move(f),
        [](const FieldContext& ctx, std::span<double> out) {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = ctx.current[i] * ctx.current[i];
        },
        [](double m) { return 2.0 * m; });
}

ModelSpec make_delayed_growth_model(std::size_t n, double beta, double mu, SurvivalMap f) {
    if (!(beta >= 0.0) || !(mu >= 0.0)) throw ValidationError("delayed growth rates must be >= 0");
    return ModelSpec::from_rhs(
        "delayed_growth", n, std::move(f),
        [beta, mu](const FieldContext& ctx, std::span<double> out) {
            for (std::size_t x = 0; x < out.size(); ++x) {
                out[x] = beta * ctx.delayed(x, x) - mu * ctx.current[x];
            }
        },
        [beta, mu](double) { return beta + mu; });
}

ModelSpec make_finite_species_model(std::vector<SpeciesRhs> g, SurvivalMap f,
                                    LipschitzModulus modulus) {
    const std::size_t m = g.size();
    if (m == 0) throw ValidationError("finite species model needs at least one species");
    for (const auto& gi : g) {
        if (!gi) throw ValidationError("species right-hand side is empty");
    }
    auto table = std::make_shared<const std::vector<SpeciesRhs>>(std::move(g));
    return ModelSpec::from_rhs(
        "finite_species", m, std::move(f),
        [table, m](const FieldContext& ctx, std::span<double> out) {
            Field row(m);
            for (std::size_t x = 0; x < m; ++x) {
                ctx.delayed_row(x, row);
                out[x] = (*table)[x](x, ctx.current, ctx.tau[x], row);
            }
        },
        std::move(modulus));
}

ModelSpec make_finite_species_model(const LinearSpeciesTable& table, SurvivalMap f) {
    const std::size_t m = table.c.size();
    auto check = [m](const std::vector<std::vector<double>>& mat, const char* what) {
        if (mat.empty()) return;
        if (mat.size() != m) {
            throw ValidationError(std::string("species table '") + what + "' has the wrong row count");
        }
        for (const auto& row : mat) {
            if (row.size() != m) {
                throw ValidationError(std::string("species table '") + what + "' has a ragged row");
            }
        }
    };
    check(table.a, "a");
    check(table.b, "b");
    double row_norm = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
        double s = 0.0;
        for (std::size_t y = 0; y < m; ++y) {
            if (!table.a.empty()) s += std::abs(table.a[x][y]);
            if (!table.b.empty()) s += std::abs(table.b[x][y]);
        }
        row_norm = std::max(row_norm, s);
    }
    auto shared = std::make_shared<const LinearSpeciesTable>(table);
    std::vector<SpeciesRhs> g;
    g.reserve(m);
    for (std::size_t x = 0; x < m; ++x) {
        g.emplace_back([shared](std::size_t i, std::span<const double> cur, double,
                                std::span<const double> delayed) {
            double v = shared->c[i];
            for (std::size_t y = 0; y < cur.size(); ++y) {
                if (!shared->a.empty()) v += shared->a[i][y] * cur[y];
                if (!shared->b.empty()) v += shared->b[i][y] * delayed[y];
            }
            return v;
        });
    }
    return make_finite_species_model(std::move(g), std::move(f),
                                     [row_norm](double) { return row_norm; });
}

}  // namespace sdde
