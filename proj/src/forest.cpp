#include "sdde/forest.hpp"

#include "sdde/errors.hpp"
#include "sdde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sdde {

void ForestParams::validate() const {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v) || v < 0.0) {
            std::ostringstream os;
            os << "forest parameter " << name << " must be finite and >= 0 (got " << v << ")";
            throw ValidationError(os.str());
        }
    };
    check(mu_j, "mu_j");
    check(mu_a, "mu_a");
    check(beta, "beta");
    check(eps, "eps");
}

BirthCache::BirthCache(const HistoryFunction& history, ResolventOperator op, double beta,
                       double past_step)
    : history_(&history), op_(std::move(op)), beta_(beta), h_(past_step),
      n_(history.grid_size()), scratch_(history.grid_size()) {
    if (op_.size() != n_) throw ValidationError("resolvent size does not match the history grid");
    if (!(past_step > 0.0)) throw ValidationError("birth cache step must be positive");
    sync();
}

void BirthCache::sync() {
    const HistoryFunction& h = *history_;
    const std::size_t have = serials_.size();
    const std::size_t count = h.node_count();
    if (have == count && have > 0 && serials_.back() == h.node_serial(count - 1)) return;

    std::size_t keep = std::min(have, count);
    while (keep > 0 && serials_[keep - 1] != h.node_serial(keep - 1)) --keep;
    serials_.resize(keep);
    fwd_.resize(count * n_);
    for (std::size_t i = keep; i < count; ++i) {
        kernels::scale(beta_, h.node_values(i), scratch_);
        op_.apply(scratch_, {fwd_.data() + i * n_, n_});
        serials_.push_back(h.node_serial(i));
    }
}

void BirthCache::ensure_past(std::size_t k) {
    if (k <= past_nodes_) return;
    past_.resize(k * n_);
    for (std::size_t m = past_nodes_ + 1; m <= k; ++m) {
        history_->initial().sample(-static_cast<double>(m) * h_, scratch_);
        kernels::scale(beta_, scratch_, scratch_);
        op_.apply(scratch_, {past_.data() + (m - 1) * n_, n_});
    }
    past_nodes_ = k;
}

const double* BirthCache::past_node(std::size_t k) {
    if (k == 0) return fwd_.data();
    ensure_past(k);
    return past_.data() + (k - 1) * n_;
}

void BirthCache::get(double s, std::span<double> out) {
    sync();
    const HistoryFunction& h = *history_;
    if (s >= 0.0) {
        const std::size_t i = h.cell_index(s);
        const double ti = h.node_time(i);
        const std::span<const double> a{fwd_.data() + i * n_, n_};
        if (s == ti) {
            std::copy(a.begin(), a.end(), out.begin());
            return;
        }
        const double w = (s - ti) / (h.node_time(i + 1) - ti);
        kernels::lerp(a, {fwd_.data() + (i + 1) * n_, n_}, w, out);
        return;
    }
    const auto k = static_cast<std::size_t>(std::floor(-s / h_));
    const double a_time = -static_cast<double>(k) * h_;
    const double* a = past_node(k);
    if (s == a_time) {
        std::copy(a, a + n_, out.begin());
        return;
    }
    const double* b = past_node(k + 1);
    a = past_node(k);  // ensure_past may have reallocated
    const double w = (a_time - s) / h_;
    kernels::lerp({a, n_}, {b, n_}, w, out);
}

Field BirthCache::get(double s) {
    Field out(n_);
    get(s, out);
    return out;
}

double BirthCache::get_point(double s, std::size_t x) {
    sync();
    const HistoryFunction& h = *history_;
    if (s >= 0.0) {
        const std::size_t i = h.cell_index(s);
        const double ti = h.node_time(i);
        const double a = fwd_[i * n_ + x];
        if (s == ti) return a;
        const double w = (s - ti) / (h.node_time(i + 1) - ti);
        return (1.0 - w) * a + w * fwd_[(i + 1) * n_ + x];
    }
    const auto k = static_cast<std::size_t>(std::floor(-s / h_));
    const double a_time = -static_cast<double>(k) * h_;
    if (s == a_time) return past_node(k)[x];
    const double b = past_node(k + 1)[x];
    const double a = past_node(k)[x];
    const double w = (a_time - s) / h_;
    return (1.0 - w) * a + w * b;
}

void BirthCache::breakpoints(double a, double b, std::vector<double>& out) {
    out.clear();
    if (!(a < b)) return;
    if (a < 0.0) {
        const auto k_hi = static_cast<std::size_t>(std::ceil(-a / h_));
        for (std::size_t k = k_hi + 1; k-- > 1;) {
            const double s = -static_cast<double>(k) * h_;
            if (s > a && s < b) out.push_back(s);
        }
    }
    const auto& times = history_->times();
    auto it = a < 0.0 ? times.begin() : std::upper_bound(times.begin(), times.end(), a);
    for (; it != times.end() && *it < b; ++it) {
        if (*it > a) out.push_back(*it);
    }
}

namespace {

class ForestEvaluator final : public RhsEvaluator {
public:
    ForestEvaluator(const HistoryFunction& history, const ForestParams& p, SurvivalMap f,
                    double past_step)
        : p_(p), f_(std::move(f)),
          births_(history, ResolventOperator(p.eps, history.grid_size()), p.beta, past_step) {}

    void evaluate(const FieldContext& ctx, std::span<double> out) override {
        for (std::size_t x = 0; x < out.size(); ++x) {
            const double s = ctx.delayed_time(x);
            const double now = ctx.current[x];
            const double g_now = *f_.scalar(now);
            const double g_del = *f_.scalar(ctx.history->evaluate(s, x));
            if (!(g_now > 0.0) || !(g_del > 0.0)) {
                throw ModelError("survival map evaluated to a non-positive value");
            }
            const double b = births_.get_point(s, x);
            out[x] = std::exp(-p_.mu_j * ctx.tau[x]) * (g_now / g_del) * b - p_.mu_a * now;
        }
    }

private:
    ForestParams p_;
    SurvivalMap f_;
    BirthCache births_;
};

}  // namespace

ModelSpec make_forest_model(const ForestParams& p, std::size_t n, SurvivalMap f) {
    p.validate();
    if (n == 0) throw ValidationError("forest grid must be non-empty");
    if (!f.is_pointwise()) {
        throw ValidationError("the forest model needs a pointwise survival map");
    }
    ModelSpec m;
    m.name = "forest";
    m.grid_size = n;
    m.survival = f;
    m.bind = [p, f](const HistoryFunction& h, double past_step) {
        return std::make_unique<ForestEvaluator>(h, p, f, past_step);
    };
    return m;
}

ModelSpec make_nonspatial_forest_model(const ForestParams& p, SurvivalMap f) {
    p.validate();
    if (!f.is_pointwise()) {
        throw ValidationError("the forest model needs a pointwise survival map");
    }
    SpeciesRhs g = [p, f](std::size_t, std::span<const double> cur, double tau,
                          std::span<const double> delayed) {
        const double ratio = *f.scalar(cur[0]) / *f.scalar(delayed[0]);
        return std::exp(-p.mu_j * tau) * ratio * (p.beta * delayed[0]) - p.mu_a * cur[0];
    };
    ModelSpec m = make_finite_species_model({g}, f);
    m.name = "forest_nonspatial";
    return m;
}

Field juvenile_integral(BirthCache& births, double t, std::span<const double> tau, double mu_j) {
    const std::size_t n = tau.size();
    Field out(n, 0.0);
    std::vector<double> pts;
    for (std::size_t x = 0; x < n; ++x) {
        const double a = t - tau[x];
        if (!(tau[x] > 0.0)) continue;
        births.breakpoints(a, t, pts);
        pts.insert(pts.begin(), a);
        pts.push_back(t);
        double sum = 0.0;
        double s0 = pts[0];
        double v0 = std::exp(-mu_j * (t - s0)) * births.get_point(s0, x);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double s1 = pts[i];
            const double v1 = std::exp(-mu_j * (t - s1)) * births.get_point(s1, x);
            sum += 0.5 * (s1 - s0) * (v0 + v1);
            s0 = s1;
            v0 = v1;
        }
        out[x] = sum;
    }
    return out;
}

Field balance_residual(BirthCache& births, std::size_t i, std::span<const double> j_prev,
                       std::span<const double> j_mid, std::span<const double> j_next,
                       const ForestParams& p) {
    const HistoryFunction& h = births.history();
    if (i == 0 || i + 1 >= h.node_count()) {
        throw DomainError("balance residual needs nodes on both sides");
    }
    const std::size_t n = h.grid_size();
    const double span = h.node_time(i + 1) - h.node_time(i - 1);
    const auto a_prev = h.node_values(i - 1);
    const auto a_mid = h.node_values(i);
    const auto a_next = h.node_values(i + 1);
    const Field b = births.get(h.node_time(i));
    Field out(n);
    for (std::size_t x = 0; x < n; ++x) {
        const double du = ((a_next[x] + j_next[x]) - (a_prev[x] + j_prev[x])) / span;
        const double rhs = b[x] - p.mu_a * a_mid[x] - p.mu_j * j_mid[x];
        out[x] = du - rhs;
    }
    return out;
}

JuvenileDiagnostics juvenile_diagnostics(const HistoryFunction& history,
                                         const std::vector<Field>& tau, const ForestParams& p,
                                         double past_step,
                                         std::span<const std::size_t> sample_nodes) {
    if (tau.size() != history.node_count()) {
        throw ValidationError("need one delay field per history node");
    }
    BirthCache births(history, ResolventOperator(p.eps, history.grid_size()), p.beta, past_step);
    JuvenileDiagnostics d;
    d.min_juvenile = std::numeric_limits<double>::infinity();
    auto juvenile_at = [&](std::size_t i) {
        return juvenile_integral(births, history.node_time(i), tau[i], p.mu_j);
    };
    for (const std::size_t i : sample_nodes) {
        if (i >= history.node_count()) throw ValidationError("sample node out of range");
        Field j = juvenile_at(i);
        d.min_juvenile = std::min(d.min_juvenile, kernels::min_value(j));
        if (i > 0 && i + 1 < history.node_count()) {
            const Field jp = juvenile_at(i - 1);
            const Field jn = juvenile_at(i + 1);
            Field r = balance_residual(births, i, jp, j, jn, p);
            d.max_residual = std::max(d.max_residual, kernels::max_abs(r));
            d.residual_nodes.push_back(i);
            d.residuals.push_back(std::move(r));
        }
        d.nodes.push_back(i);
        d.times.push_back(history.node_time(i));
        d.juveniles.push_back(std::move(j));
    }
    if (sample_nodes.empty()) d.min_juvenile = 0.0;
    return d;
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& a) {
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);
    // Taylor to round-off: ||x|| <= 1/2, so 20 terms are far past 1e-17.
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
    Eigen::MatrixXd term = result;
    for (int k = 1; k <= 20; ++k) {
        term = term * x / static_cast<double>(k);
        result += term;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

ComparisonReport comparison_bound_check(const HistoryFunction& history,
                                        std::span<const std::size_t> sample_nodes,
                                        const std::vector<Field>& juveniles,
                                        const ForestParams& p, double tol) {
    if (sample_nodes.empty() || sample_nodes.front() != 0) {
        throw ValidationError("comparison samples must start at node 0");
    }
    if (juveniles.size() != sample_nodes.size()) {
        throw ValidationError("need one juvenile field per sample");
    }
    const std::size_t n = history.grid_size();
    const ResolventOperator op(p.eps, n);
    const Eigen::MatrixXd r = resolvent_matrix(op);
    const double mu = std::min(p.mu_a, p.mu_j);
    const Eigen::MatrixXd gen =
        p.beta * r - mu * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n));
    Eigen::VectorXd u0(static_cast<Eigen::Index>(n));
    const auto a0 = history.node_values(0);
    for (std::size_t x = 0; x < n; ++x) u0[static_cast<Eigen::Index>(x)] = a0[x] + juveniles[0][x];

    ComparisonReport rep;
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < sample_nodes.size(); ++m) {
        const std::size_t i = sample_nodes[m];
        const double t = history.node_time(i);
        const Eigen::VectorXd bound = m == 0 ? u0 : Eigen::VectorXd(matrix_exponential(gen * t) * u0);
        const auto a = history.node_values(i);
        for (std::size_t x = 0; x < n; ++x) {
            const double bx = bound[static_cast<Eigen::Index>(x)];
            const double excess = a[x] + juveniles[m][x] - bx - tol * (1.0 + std::abs(bx));
            if (excess > rep.max_excess) {
                rep.max_excess = excess;
                rep.worst_time = t;
            }
            if (excess > 0.0) rep.holds = false;
        }
        ++rep.samples;
    }
    return rep;
}

}  // namespace sdde
