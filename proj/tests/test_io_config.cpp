#include "sdde/config.hpp"
#include "sdde/errors.hpp"
#include "sdde/io.hpp"
#include "sdde/run.hpp"
#include "sdde/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace sdde;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"({
  "model": {"id": "unit_growth"},
  "survival": {"id": "unit"},
  "grid": 2,
  "horizon": 1.5,
  "phi": {"kind": "constant", "c": 0.0},
  "tau0": {"kind": "constant", "c": 1.0},
  "solver": {"dt": 0.01}
})";

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sdde_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string write_config(const fs::path& dir, const std::string& name, std::string body,
                         const std::string& output_block) {
    body.insert(body.rfind('}'), output_block);
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p.string();
}

std::string outputs(const fs::path& dir, const std::string& stem) {
    return ",\n  \"output\": {\"trajectory\": \"" + (dir / (stem + ".csv")).string() + "\", \"summary\": \"" +
           (dir / (stem + ".json")).string() + "\"}\n";
}

}  // namespace

TEST_SUITE("io") {
    TEST_CASE("numbers round-trip through 17 digits") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 2000; ++i) {
            const double v = u(rng) * std::pow(10.0, static_cast<int>(u(rng) * 300));
            CHECK(parse_double(format_double(v)) == v);
        }
        CHECK(std::isnan(parse_double(format_double(std::nan("")))));
        CHECK(parse_double(format_double(-std::numeric_limits<double>::infinity())) < 0);
        CHECK(parse_double(format_double(5e-324)) == 5e-324);
        CHECK_THROWS_AS((void)parse_double("1.5x"), ValidationError);
        CHECK_THROWS_AS((void)parse_double(""), ValidationError);
    }

    TEST_CASE("csv round trip") {
        TrajectoryTable t;
        append_rows(t, 0.1, {0.0, 0.5}, Field{1.0 / 3.0, 2.0}, Field{0.7, 0.9}, Field{0.1, 0.2}, Field{3.0, 4.0});
        append_rows(t, 0.2, {0.0, 0.5}, Field{std::exp(1.0), -1e-300}, Field{0.71, 0.91}, Field{0.11, 0.21}, Field{3.1, 4.1});
        std::stringstream ss;
        write_csv(ss, t);
        const TrajectoryTable back = read_csv(ss);
        CHECK(back.columns == std::vector<std::string>{"t", "x", "A", "tau", "J", "B"});
        CHECK(back.values == t.values);
        CHECK(back.column("B") == 5);
        CHECK_THROWS_AS((void)back.column("Q"), ValidationError);

        TrajectoryTable plain;
        append_rows(plain, 0.0, {0.0}, Field{1.0}, Field{1.0}, {}, {});
        CHECK(plain.columns.size() == 4);
        CHECK_THROWS_AS(append_rows(plain, 0.1, {0.0}, Field{1.0}, Field{1.0}, Field{1.0}, {}), ValidationError);

        std::stringstream broken("t,x\n1,2,3\n");
        CHECK_THROWS_AS((void)read_csv(broken), ValidationError);
    }

    TEST_CASE("summary round trip") {
        Summary s;
        s.verdict = "blow_up";
        s.t_bu_estimate = 0.99890583295471613;
        s.max_sup_norm = 1101.1032036067834;
        s.residual_max = 1.0 / 7.0;
        s.wall_time_s = 0.25;
        s.model = "riccati";
        s.message = "quote \" and newline \n";
        s.bracket_lo = 0.9;
        s.bracket_hi = 1.0;
        s.windows = 12;
        s.min_juvenile = 0.1;
        std::stringstream ss;
        write_summary(ss, s);
        const Summary b = read_summary(ss);
        CHECK(b.verdict == s.verdict);
        CHECK(*b.t_bu_estimate == *s.t_bu_estimate);
        CHECK(b.max_sup_norm == s.max_sup_norm);
        CHECK(b.residual_max == s.residual_max);
        CHECK(b.message == s.message);
        CHECK(*b.bracket_hi == 1.0);
        CHECK(b.windows == 12);
        CHECK(*b.min_juvenile == 0.1);
        CHECK_FALSE(b.balance_residual_max.has_value());
    }

    TEST_CASE("config parsing") {
        const RunConfig c = parse_config(kBase);
        CHECK(c.model.id == "unit_growth");
        CHECK(c.grid == 2);
        CHECK(c.solver.dt == 0.01);
        CHECK(c.output.trajectory == "trajectory.csv");

        auto rejects = [](const std::string& text) { CHECK_THROWS_AS((void)parse_config(text), ValidationError); };
        rejects("{not json");
        rejects(R"({"model": {"id": "nope"}, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}})");
        rejects(R"({"model": {"id": "unit_growth"}, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}, "extra": 1})");
        rejects(R"({"model": {"id": "unit_growth"}, "horizon": -1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}})");
        rejects(R"({"model": {"id": "unit_growth"}, "horizon": 1, "phi": {"kind": "cubic"}, "tau0": {"kind": "constant", "c": 1}})");
        rejects(R"({"model": {"id": "unit_growth"}, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": -1}})");
        rejects(R"({"model": {"id": "decay"}, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}})");
        rejects(R"({"model": {"id": "unit_growth"}, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}, "solver": {"dt": 0}})");
        rejects(R"({"model": {"id": "forest", "mu_j": 1, "mu_a": 1, "beta": 1}, "survival": {"id": "inverse_mean"}, "grid": 4, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}})");
        rejects(R"({"model": {"id": "finite_species", "c": [0, 0], "a": [[1]]}, "horizon": 1, "phi": {"kind": "constant"}, "tau0": {"kind": "constant", "c": 1}})");
        rejects(R"({"model": {"id": "unit_growth"}, "horizon": 1, "phi": {"kind": "linear"}, "tau0": {"kind": "constant", "c": 1}})");
    }

    TEST_CASE("presets") {
        const RunConfig c = parse_config(R"({"model": {"id": "decay", "mu": 1}, "grid": 4, "horizon": 1,
            "phi": {"kind": "exponential", "c": 2, "r": 0.5, "a": 0.1, "k": 1},
            "tau0": {"kind": "sinusoid", "c": 1, "a": 0.2, "omega": 3, "k": 1}})");
        const InitialData phi = build_phi(c);
        CHECK(phi(-2.0, 0) == doctest::Approx(2.0 * std::exp(-1.0) + 0.1));
        const Field tau0 = build_tau0(c);
        CHECK(tau0[0] == doctest::Approx(1.0));
        CHECK(tau0[1] == doctest::Approx(1.2));
        CHECK(output_positions(c)[2] == 0.5);
    }

    TEST_CASE("run writes outputs, final A equals the horizon") {
        TempDir d("run_ok");
        const std::string cfg = write_config(d.path, "c.json", kBase, outputs(d.path, "out"));
        std::ostringstream log;
        REQUIRE(execute_run(cfg, log) == kExitOk);
        std::ifstream sj(d.path / "out.json");
        const Summary s = read_summary(sj);
        CHECK(s.verdict == "reached_horizon");
        CHECK_FALSE(s.t_bu_estimate.has_value());
        std::ifstream cj(d.path / "out.csv");
        const TrajectoryTable t = read_csv(cj);
        CHECK(t.columns == std::vector<std::string>{"t", "x", "A", "tau"});
        const std::size_t last = t.rows() - 1;
        CHECK(t.at(last, 0) == 1.5);
        CHECK(t.at(last, 2) == doctest::Approx(1.5).epsilon(1e-14));
    }

    TEST_CASE("identical configs give identical bytes apart from wall time") {
        TempDir d("run_det");
        std::string body = R"({
  "model": {"id": "forest", "mu_j": 0.2, "mu_a": 0.4, "beta": 1.0, "eps": 0.02},
  "grid": 8, "horizon": 1.0,
  "phi": {"kind": "constant", "c": 1.0, "a": 0.3, "k": 1},
  "tau0": {"kind": "constant", "c": 0.5},
  "solver": {"dt": 0.01}
})";
        std::ostringstream log;
        REQUIRE(execute_run(write_config(d.path, "a.json", body, outputs(d.path, "a")), log) == 0);
        REQUIRE(execute_run(write_config(d.path, "b.json", body, outputs(d.path, "b")), log) == 0);
        auto slurp = [](const fs::path& p) {
            std::ifstream in(p);
            std::stringstream ss;
            ss << in.rdbuf();
            return ss.str();
        };
        CHECK(slurp(d.path / "a.csv") == slurp(d.path / "b.csv"));
        auto strip = [](std::string s) {
            const auto i = s.find("\"wall_time_s\"");
            return s.erase(i, s.find('\n', i) - i);
        };
        CHECK(strip(slurp(d.path / "a.json")) == strip(slurp(d.path / "b.json")));
        std::ifstream cj(d.path / "a.csv");
        const TrajectoryTable t = read_csv(cj);
        CHECK(t.columns.back() == "B");
    }

    TEST_CASE("invalid config: exit 2 and no files") {
        TempDir d("run_bad");
        const std::string cfg =
            write_config(d.path, "c.json", R"({"model": {"id": "riccati"}, "horizon": 0})", outputs(d.path, "out"));
        std::ostringstream log;
        CHECK(execute_run(cfg, log) == kExitValidation);
        CHECK_FALSE(fs::exists(d.path / "out.csv"));
        CHECK_FALSE(fs::exists(d.path / "out.json"));
        CHECK(execute_run((d.path / "missing.json").string(), log) == kExitValidation);
        // Output directory must exist.
        std::string body = kBase;
        const std::string bad = write_config(d.path, "d.json", body, outputs(d.path / "nowhere", "out"));
        CHECK(execute_run(bad, log) == kExitValidation);
    }

    TEST_CASE("contraction abort: exit 4 with partial outputs") {
        TempDir d("run_abort");
        const std::string body = R"({"model": {"id": "riccati"}, "survival": {"id": "unit"}, "horizon": 2,
            "phi": {"kind": "constant", "c": 1}, "tau0": {"kind": "constant", "c": 1},
            "solver": {"dt": 0.01, "max_halvings": 2}})";
        std::ostringstream log;
        CHECK(execute_run(write_config(d.path, "c.json", body, outputs(d.path, "out")), log) == kExitContraction);
        std::ifstream sj(d.path / "out.json");
        CHECK(read_summary(sj).verdict == "contraction_abort");
        CHECK(fs::file_size(d.path / "out.csv") > 0);
    }

    TEST_CASE("domain error: exit 3 with partial outputs") {
        TempDir d("run_domain");
        // The initial delay reaches past the virtual-node window of the quadrature.
        const std::string body = R"({"model": {"id": "delayed_growth", "beta": 1.0}, "grid": 1, "horizon": 1,
            "phi": {"kind": "constant", "c": 1}, "tau0": {"kind": "constant", "c": 2000}, "solver": {"dt": 0.01}})";
        std::ostringstream log;
        const int rc = execute_run(write_config(d.path, "c.json", body, outputs(d.path, "out")), log);
        CHECK(rc == kExitRuntime);
        std::ifstream sj(d.path / "out.json");
        const auto summary = read_summary(sj);
        CHECK(summary.verdict == "domain_error");
        CHECK(summary.max_sup_norm == 1.0);
        CHECK(fs::exists(d.path / "out.csv"));
    }

    TEST_CASE("verify reports") {
        CHECK_THROWS_AS((void)run_suite("nope"), ValidationError);
        const VerifyReport a = run_suite("spatial", 9);
        const VerifyReport b = run_suite("spatial", 9);
        CHECK(report_json(a) == report_json(b));
        CHECK(a.passed());
        const VerifyReport d1 = run_suite("delay", 1);
        CHECK(report_json(d1) == report_json(run_suite("delay", 1)));
        CHECK(d1.passed());
        const auto j = report_json(d1);
        CHECK(j.find("\"suite\": \"delay\"") != std::string::npos);
        CHECK(suite_names().back() == "all");
    }
}
