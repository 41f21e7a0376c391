#include "sdde/run.hpp"

#include "sdde/config.hpp"
#include "sdde/errors.hpp"
#include "sdde/forest.hpp"
#include "sdde/io.hpp"
#include "sdde/kernels.hpp"
#include "sdde/stepper.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

namespace sdde {
namespace {

void check_output_path(const std::string& path) {
    const std::filesystem::path p(path);
    const auto dir = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
    if (!std::filesystem::is_directory(dir)) {
        throw ValidationError("config: output directory '" + dir.string() + "' does not exist");
    }
}

// Node indices at which residual diagnostics are sampled: evenly spread, last included.
std::vector<std::size_t> residual_nodes(std::size_t node_count, std::size_t samples) {
    std::vector<std::size_t> out;
    if (node_count < 2 || samples == 0) return out;
    const std::size_t last = node_count - 1;
    for (std::size_t s = 1; s <= samples; ++s) {
        const std::size_t i = std::max<std::size_t>(1, last * s / samples);
        if (out.empty() || out.back() != i) out.push_back(i);
    }
    return out;
}

}  // namespace

int execute_run(const std::string& config_path, std::ostream& log) {
    RunConfig cfg;
    ModelSpec model;
    InitialData phi;
    Field tau0;
    try {
        cfg = load_config(config_path);
        check_output_path(cfg.output.trajectory);
        check_output_path(cfg.output.summary);
        model = build_model(cfg);
        phi = build_phi(cfg);
        tau0 = build_tau0(cfg);
    } catch (const ValidationError& e) {
        log << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    const auto start = std::chrono::steady_clock::now();
    Summary summary;
    summary.model = model.name;
    TrajectoryTable table;
    int status = kExitOk;

    Trajectory traj;
    try {
        traj = simulate(model, phi, tau0, cfg.horizon, cfg.solver);
    } catch (const ValidationError& e) {
        log << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    summary.verdict = verdict_name(traj.verdict);
    summary.message = traj.message;
    summary.final_time = traj.final_time();
    summary.max_sup_norm = traj.max_sup_norm;
    summary.windows = traj.windows.size();
    summary.rejected_windows = traj.rejected_windows;
    if (traj.verdict == Verdict::BlowUp) {
        summary.t_bu_estimate = traj.t_bu;
        summary.bracket_lo = traj.bracket_lo;
        summary.bracket_hi = traj.bracket_hi;
    }
    if (traj.verdict == Verdict::DomainError || traj.verdict == Verdict::ModelError) status = kExitRuntime;
    if (traj.verdict == Verdict::ContractionAbort) status = kExitContraction;

    const HistoryFunction& h = traj.history;
    const std::vector<double> x = output_positions(cfg);
    try {
        const std::vector<std::size_t> rnodes = residual_nodes(h.node_count(), cfg.residual_samples);
        // Cell midpoints ending at the sampled nodes.
        std::vector<double> rtimes;
        for (const std::size_t i : rnodes) rtimes.push_back(0.5 * (h.node_time(i - 1) + h.node_time(i)));
        const ResidualReport res = verify_solution_residual(traj, model, rtimes, cfg.solver.tau_tol);
        summary.residual_a = res.a_residual;
        summary.residual_threshold = res.threshold_residual;
        summary.residual_max = res.max();

        std::unique_ptr<BirthCache> births;
        if (is_forest(cfg)) {
            births = std::make_unique<BirthCache>(h, ResolventOperator(cfg.model.forest.eps, cfg.grid),
                                                  cfg.model.forest.beta, traj.past_step);
            std::vector<std::size_t> interior;
            for (const std::size_t i : rnodes) {
                if (i + 1 < h.node_count()) interior.push_back(i);
            }
            const JuvenileDiagnostics jd =
                juvenile_diagnostics(h, traj.tau, cfg.model.forest, traj.past_step, interior);
            if (!interior.empty()) summary.balance_residual_max = jd.max_residual;
        }
        double min_j = std::numeric_limits<double>::infinity();
        const Field none;
        std::vector<std::size_t> out_nodes;
        for (std::size_t i = 0; i < h.node_count(); i += cfg.output.stride) out_nodes.push_back(i);
        if (out_nodes.back() != h.node_count() - 1) out_nodes.push_back(h.node_count() - 1);
        for (const std::size_t node : out_nodes) {
            const double t = h.node_time(node);
            const Field a(h.node_values(node).begin(), h.node_values(node).end());
            if (births) {
                const Field j = juvenile_integral(*births, t, traj.tau[node], cfg.model.forest.mu_j);
                min_j = std::min(min_j, kernels::min_value(j));
                append_rows(table, t, x, a, traj.tau[node], j, births->get(t));
            } else {
                append_rows(table, t, x, a, traj.tau[node], none, none);
            }
        }
        if (births) summary.min_juvenile = min_j;
    } catch (const Error& e) {
        log << "error: diagnostics failed: " << e.what() << '\n';
        if (summary.message.empty()) summary.message = e.what();
        status = kExitRuntime;
    }

    summary.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    {
        std::ofstream out(cfg.output.trajectory);
        write_csv(out, table);
        if (!out) {
            log << "error: cannot write '" << cfg.output.trajectory << "'\n";
            status = kExitRuntime;
        }
    }
    {
        std::ofstream out(cfg.output.summary);
        write_summary(out, summary);
        if (!out) {
            log << "error: cannot write '" << cfg.output.summary << "'\n";
            status = kExitRuntime;
        }
    }
    if (status != kExitOk) log << "run ended: " << summary.verdict << ' ' << summary.message << '\n';
    return status;
}

}  // namespace sdde
