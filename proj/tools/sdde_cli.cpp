#include "sdde/errors.hpp"
#include "sdde/run.hpp"
#include "sdde/verify.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"State-dependent delay equation solver"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "simulate a JSON config; writes trajectory CSV and summary JSON");
    run->add_option("config", config, "config file")->required();

    std::string suite;
    std::uint64_t seed = sdde::kDefaultSeed;
    auto* verify = app.add_subcommand("verify", "run a property suite and print a JSON report");
    verify->add_option("suite", suite, "delay | stepper | spatial | forest | all")->required();
    verify->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        (void)app.exit(e);
        return sdde::kExitValidation;
    }

    if (*run) return sdde::execute_run(config, std::cerr);

    try {
        const sdde::VerifyReport report = sdde::run_suite(suite, seed);
        std::cout << sdde::report_json(report);
        return report.passed() ? 0 : 1;
    } catch (const sdde::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return sdde::kExitValidation;
    }
}
