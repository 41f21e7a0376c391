#pragma once

// Trajectory CSV (long format, one row per (t, x)) and summary JSON. Numbers
// are written with 17 significant digits so the readers recover every double
// exactly.

#include "sdde/field.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sdde {

/// "%.17g"; non-finite values as nan / inf / -inf.
[[nodiscard]] std::string format_double(double v);
/// Inverse of format_double. Throws ValidationError on malformed input.
[[nodiscard]] double parse_double(const std::string& s);

struct TrajectoryTable {
    std::vector<std::string> columns;  // t, x, A, tau[, J, B]
    std::vector<double> values;        // row-major

    [[nodiscard]] std::size_t rows() const {
        return columns.empty() ? 0 : values.size() / columns.size();
    }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const {
        return values[row * columns.size() + col];
    }
    /// Column index by name; throws ValidationError when absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
};

/// Append the rows of one output time. j and b may be empty (omitted columns
/// must then be absent from the table).
void append_rows(TrajectoryTable& table, double t, const std::vector<double>& x,
                 const Field& a, const Field& tau, const Field& j, const Field& b);

void write_csv(std::ostream& out, const TrajectoryTable& table);
[[nodiscard]] TrajectoryTable read_csv(std::istream& in);

struct Summary {
    std::string verdict;
    std::optional<double> t_bu_estimate;
    double max_sup_norm = 0.0;
    double residual_max = 0.0;
    double wall_time_s = 0.0;
    // Extra fields, written after the required keys.
    std::string model;
    std::string message;
    double final_time = 0.0;
    std::optional<double> bracket_lo;
    std::optional<double> bracket_hi;
    double residual_a = 0.0;
    double residual_threshold = 0.0;
    std::size_t windows = 0;
    std::size_t rejected_windows = 0;
    std::optional<double> min_juvenile;
    std::optional<double> balance_residual_max;
};

void write_summary(std::ostream& out, const Summary& s);
[[nodiscard]] Summary read_summary(std::istream& in);

}  // namespace sdde
