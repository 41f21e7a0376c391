#pragma once

// Randomized property suites over the engine's invariants. Reports are pure
// functions of (suite, seed): no timings, so two runs compare byte-equal.

#include <cstdint>
#include <string>
#include <vector>

namespace sdde {

struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    double value = 0.0;  // measured quantity
    double limit = 0.0;  // threshold it was compared to
    std::string detail;
};

struct VerifyReport {
    std::string suite;
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;

    [[nodiscard]] bool passed() const;
};

inline constexpr std::uint64_t kDefaultSeed = 20240607;

/// Suite names accepted by run_suite, "all" last.
[[nodiscard]] const std::vector<std::string>& suite_names();

/// Runs one suite (or every suite for "all"). Throws ValidationError for an
/// unknown name.
[[nodiscard]] VerifyReport run_suite(const std::string& suite, std::uint64_t seed = kDefaultSeed);

/// JSON document with one object per check, numbers at 17 significant digits.
[[nodiscard]] std::string report_json(const VerifyReport& report);

}  // namespace sdde
