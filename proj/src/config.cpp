#include "sdde/config.hpp"

#include "sdde/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace sdde {
namespace {

using nlohmann::json;

// Object reader that remembers which keys were consumed so leftovers can be
// reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("", "must be an object");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ValidationError("config: " + where(key) + " " + msg);
    }

    [[nodiscard]] std::string where(const std::string& key) const {
        if (key.empty()) return path_.empty() ? "document" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

    [[nodiscard]] bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const std::string& key) {
        if (!has(key)) fail(key, "is required");
        return j_.at(key);
    }

    double number(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        return number_of(j_.at(key), key);
    }

    double number(const std::string& key) { return number_of(at(key), key); }

    std::size_t count(const std::string& key, std::size_t fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(key, "must be a non-negative integer");
        return static_cast<std::size_t>(v.get<long long>());
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) fail(key, "must be a string");
        return v.get<std::string>();
    }

    std::string text(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) fail(key, "must be a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(key, "must be true or false");
        return v.get<bool>();
    }

    std::vector<double> vector(const std::string& key) {
        const json& v = at(key);
        if (!v.is_array()) fail(key, "must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) out.push_back(number_of(e, key));
        return out;
    }

    std::vector<std::vector<double>> matrix(const std::string& key) {
        if (!has(key)) return {};
        const json& v = j_.at(key);
        if (!v.is_array()) fail(key, "must be an array of rows");
        std::vector<std::vector<double>> out;
        for (const auto& row : v) {
            if (!row.is_array()) fail(key, "must be an array of rows");
            std::vector<double> r;
            for (const auto& e : row) r.push_back(number_of(e, key));
            out.push_back(std::move(r));
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) fail(it.key(), "is not a recognized setting");
        }
    }

private:
    double number_of(const json& v, const std::string& key) const {
        if (!v.is_number()) fail(key, "must be a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail(key, "must be finite");
        return d;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Preset parse_preset(const json& j, const std::string& path) {
    Section s(j, path);
    Preset p;
    const std::string kind = s.text("kind");
    try {
        p.kind = preset_kind(kind);
    } catch (const ValidationError&) {
        s.fail("kind", "must be one of constant, linear, exponential, sinusoid (got '" + kind + "')");
    }
    p.c = s.number("c", 0.0);
    p.a = s.number("a", 0.0);
    const double k = s.number("k", 0.0);
    if (k != std::floor(k) || std::abs(k) > 1e6) s.fail("k", "must be an integer wave number");
    p.k = static_cast<int>(k);
    if (p.kind == Preset::Kind::Linear) p.b = s.number("b");
    if (p.kind == Preset::Kind::Exponential) p.r = s.number("r");
    if (p.kind == Preset::Kind::Sinusoid) p.omega = s.number("omega");
    s.finish();
    return p;
}

}  // namespace

Preset::Kind preset_kind(const std::string& name) {
    if (name == "constant") return Preset::Kind::Constant;
    if (name == "linear") return Preset::Kind::Linear;
    if (name == "exponential") return Preset::Kind::Exponential;
    if (name == "sinusoid") return Preset::Kind::Sinusoid;
    throw ValidationError("unknown preset '" + name + "'");
}

RunConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: not valid JSON: ") + e.what());
    }
    Section root(doc, "");
    RunConfig c;

    {
        Section m(root.at("model"), "model");
        c.model.id = m.text("id");
        const std::string& id = c.model.id;
        if (id == "decay") {
            c.model.mu = m.number("mu");
        } else if (id == "delayed_growth") {
            c.model.beta = m.number("beta");
            c.model.mu = m.number("mu", 0.0);
        } else if (id == "forest" || id == "forest_nonspatial") {
            c.model.forest.mu_j = m.number("mu_j");
            c.model.forest.mu_a = m.number("mu_a");
            c.model.forest.beta = m.number("beta");
            c.model.forest.eps = m.number("eps", 0.0);
            try {
                c.model.forest.validate();
            } catch (const ValidationError& e) {
                m.fail("", e.what());
            }
        } else if (id == "finite_species") {
            c.model.species.c = m.vector("c");
            c.model.species.a = m.matrix("a");
            c.model.species.b = m.matrix("b");
        } else if (id != "stationary" && id != "unit_growth" && id != "riccati") {
            m.fail("id", "is not a known model (got '" + id + "')");
        }
        m.finish();
    }
    {
        if (root.has("survival")) {
            Section s(root.at("survival"), "survival");
            c.survival.id = s.text("id");
            if (c.survival.id == "constant") c.survival.c = s.number("c");
            if (c.survival.id == "exponential_decay") c.survival.k = s.number("k");
            s.finish();
        }
    }

    const double grid = root.number("grid", c.model.id == "finite_species"
                                                ? static_cast<double>(c.model.species.c.size())
                                                : 1.0);
    if (grid < 1 || grid != std::floor(grid) || grid > 1 << 20) root.fail("grid", "must be an integer >= 1");
    c.grid = static_cast<std::size_t>(grid);
    if (c.model.id == "finite_species" && c.grid != c.model.species.c.size()) {
        root.fail("grid", "must equal the number of species");
    }
    if (c.model.id == "forest_nonspatial" && c.grid != 1) root.fail("grid", "must be 1 for forest_nonspatial");

    c.horizon = root.number("horizon");
    if (!(c.horizon > 0.0)) root.fail("horizon", "must be positive");

    c.phi = parse_preset(root.at("phi"), "phi");
    c.tau0 = parse_preset(root.at("tau0"), "tau0");

    if (root.has("solver")) {
        Section s(root.at("solver"), "solver");
        SolverConfig& v = c.solver;
        v.dt = s.number("dt", v.dt);
        v.window_steps = s.count("window_steps", v.window_steps);
        v.picard_tol = s.number("picard_tol", v.picard_tol);
        v.picard_max_iter = s.count("picard_max_iter", v.picard_max_iter);
        v.blowup_threshold = s.number("blowup_threshold", v.blowup_threshold);
        v.tau_tol = s.number("tau_tol", v.tau_tol);
        v.alpha = s.number("alpha", v.alpha);
        v.norm_window = s.number("norm_window", v.norm_window);
        v.max_halvings = s.count("max_halvings", v.max_halvings);
        v.use_radius = s.flag("use_radius", v.use_radius);
        v.radius_bound = s.number("radius_bound", v.radius_bound);
        s.finish();
        try {
            v.validate();
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("config: ") + e.what());
        }
    }
    if (root.has("output")) {
        Section s(root.at("output"), "output");
        c.output.trajectory = s.text("trajectory", c.output.trajectory);
        c.output.summary = s.text("summary", c.output.summary);
        c.output.stride = s.count("stride", c.output.stride);
        if (c.output.stride == 0) s.fail("stride", "must be >= 1");
        if (c.output.trajectory.empty() || c.output.summary.empty()) s.fail("", "paths must be non-empty");
        if (c.output.trajectory == c.output.summary) s.fail("", "trajectory and summary paths must differ");
        s.finish();
    }
    c.residual_samples = root.count("residual_samples", c.residual_samples);
    c.seed = root.count("seed", 0);
    root.finish();

    // Model construction and data checks also count as validation.
    const ModelSpec model = build_model(c);
    const Field tau0 = build_tau0(c);
    for (std::size_t j = 0; j < tau0.size(); ++j) {
        if (!(tau0[j] >= 0.0)) throw ValidationError("config: tau0 must be non-negative at every grid point");
    }
    const InitialData phi = build_phi(c);
    if (!all_finite(phi.sample(0.0))) throw ValidationError("config: phi is not finite at t = 0");
    try {
        check_survival_contract(model.survival, c.grid, c.seed, 16);
    } catch (const ModelError& e) {
        throw ValidationError(std::string("config: survival map: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

SurvivalMap build_survival(const SurvivalConfig& c) {
    if (c.id == "unit") return SurvivalMap::unit();
    if (c.id == "constant") return SurvivalMap::constant(c.c);
    if (c.id == "inverse_positive_part") return SurvivalMap::inverse_positive_part();
    if (c.id == "exponential_decay") return SurvivalMap::exponential_decay(c.k);
    if (c.id == "inverse_mean") return SurvivalMap::inverse_mean();
    throw ValidationError("config: survival.id is not a known survival map (got '" + c.id + "')");
}

ModelSpec build_model(const RunConfig& c) {
    SurvivalMap f = build_survival(c.survival);
    const std::string& id = c.model.id;
    try {
        if (id == "stationary") return make_stationary_model(c.grid, f);
        if (id == "unit_growth") return make_unit_growth_model(c.grid, f);
        if (id == "decay") return make_decay_model(c.grid, c.model.mu, f);
        if (id == "riccati") return make_riccati_model(c.grid, f);
        if (id == "delayed_growth") return make_delayed_growth_model(c.grid, c.model.beta, c.model.mu, f);
        if (id == "finite_species") return make_finite_species_model(c.model.species, f);
        if (id == "forest") return make_forest_model(c.model.forest, c.grid, f);
        if (id == "forest_nonspatial") return make_nonspatial_forest_model(c.model.forest, f);
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("config: model: ") + e.what());
    }
    throw ValidationError("config: model.id is not a known model (got '" + id + "')");
}

InitialData build_phi(const RunConfig& c) { return c.phi.as_initial_data(Grid(c.grid)); }

Field build_tau0(const RunConfig& c) { return c.tau0.as_field(Grid(c.grid)); }

std::vector<double> output_positions(const RunConfig& c) {
    std::vector<double> x(c.grid);
    const Grid g(c.grid);
    for (std::size_t j = 0; j < c.grid; ++j) {
        x[j] = c.model.id == "finite_species" ? static_cast<double>(j) : g.position(j);
    }
    return x;
}

bool is_forest(const RunConfig& c) { return c.model.id == "forest" || c.model.id == "forest_nonspatial"; }

}  // namespace sdde
