#pragma once

// JSON run configuration: model, survival map, initial-data presets, solver
// settings and output paths.

#include "sdde/field.hpp"
#include "sdde/forest.hpp"
#include "sdde/model.hpp"
#include "sdde/stepper.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sdde {

struct SurvivalConfig {
    std::string id = "inverse_positive_part";  // unit | constant | inverse_positive_part | exponential_decay | inverse_mean
    double c = 1.0;
    double k = 1.0;
};

struct ModelConfig {
    // stationary | unit_growth | decay | riccati | delayed_growth |
    // finite_species | forest | forest_nonspatial
    std::string id;
    double mu = 0.0;
    double beta = 0.0;
    ForestParams forest;
    LinearSpeciesTable species;
};

struct OutputConfig {
    std::string trajectory = "trajectory.csv";
    std::string summary = "summary.json";
    std::size_t stride = 1;  // every stride-th node is written
};

struct RunConfig {
    ModelConfig model;
    SurvivalConfig survival;
    std::size_t grid = 1;
    double horizon = 1.0;
    Preset phi;
    Preset tau0;
    SolverConfig solver;
    OutputConfig output;
    std::size_t residual_samples = 10;
    std::uint64_t seed = 0;
};

/// Parse and validate. Every error is a ValidationError naming the field;
/// unknown keys are rejected.
[[nodiscard]] RunConfig parse_config(const std::string& json_text);
[[nodiscard]] RunConfig load_config(const std::string& path);

[[nodiscard]] SurvivalMap build_survival(const SurvivalConfig& c);
[[nodiscard]] ModelSpec build_model(const RunConfig& c);
[[nodiscard]] Preset::Kind preset_kind(const std::string& name);

/// phi and tau_0 on the model grid.
[[nodiscard]] InitialData build_phi(const RunConfig& c);
[[nodiscard]] Field build_tau0(const RunConfig& c);

/// Grid positions written to the x column: j / N, or the species index for
/// finite-species models.
[[nodiscard]] std::vector<double> output_positions(const RunConfig& c);

[[nodiscard]] bool is_forest(const RunConfig& c);

}  // namespace sdde
