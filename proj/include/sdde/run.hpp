#pragma once

// The `run` command: config in, trajectory CSV and summary JSON out.

#include <iosfwd>
#include <string>

namespace sdde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitContraction = 4;

/// Runs the configured simulation and writes its outputs. Returns the exit
/// status: 0 on a completed run (horizon or blow-up verdict), 2 on a
/// configuration error (nothing written), 3 on a runtime model or domain
/// error (partial outputs written), 4 on a contraction abort.
int execute_run(const std::string& config_path, std::ostream& log);

}  // namespace sdde
