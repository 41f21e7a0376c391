#include "sdde/io.hpp"

#include "sdde/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace sdde {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s.empty()) throw ValidationError("empty number field");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || (errno == ERANGE && std::isinf(v))) {
        throw ValidationError("malformed number '" + s + "'");
    }
    return v;
}

std::size_t TrajectoryTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return i;
    }
    throw ValidationError("trajectory has no column '" + name + "'");
}

void append_rows(TrajectoryTable& table, double t, const std::vector<double>& x, const Field& a,
                 const Field& tau, const Field& j, const Field& b) {
    if (table.columns.empty()) {
        table.columns = {"t", "x", "A", "tau"};
        if (!j.empty()) table.columns.emplace_back("J");
        if (!b.empty()) table.columns.emplace_back("B");
    }
    const std::size_t want = 4 + (j.empty() ? 0 : 1) + (b.empty() ? 0 : 1);
    if (want != table.columns.size()) throw ValidationError("inconsistent trajectory columns");
    for (std::size_t k = 0; k < x.size(); ++k) {
        table.values.push_back(t);
        table.values.push_back(x[k]);
        table.values.push_back(a[k]);
        table.values.push_back(tau[k]);
        if (!j.empty()) table.values.push_back(j[k]);
        if (!b.empty()) table.values.push_back(b[k]);
    }
}

void write_csv(std::ostream& out, const TrajectoryTable& table) {
    const std::size_t nc = table.columns.size();
    for (std::size_t c = 0; c < nc; ++c) out << (c ? "," : "") << table.columns[c];
    out << '\n';
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < nc; ++c) out << (c ? "," : "") << format_double(table.at(r, c));
        out << '\n';
    }
}

TrajectoryTable read_csv(std::istream& in) {
    TrajectoryTable t;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("trajectory CSV is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            t.values.push_back(parse_double(cell));
            ++n;
        }
        if (n != t.columns.size()) {
            throw ValidationError("trajectory CSV row " + std::to_string(row) + " has the wrong field count");
        }
    }
    return t;
}

namespace {

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string number_or_null(const std::optional<double>& v) {
    if (!v || !std::isfinite(*v)) return "null";
    return format_double(*v);
}

std::string finite_or_null(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

}  // namespace

void write_summary(std::ostream& out, const Summary& s) {
    out << "{\n"
        << "  \"verdict\": " << quote(s.verdict) << ",\n"
        << "  \"t_bu_estimate\": " << number_or_null(s.t_bu_estimate) << ",\n"
        << "  \"max_sup_norm\": " << finite_or_null(s.max_sup_norm) << ",\n"
        << "  \"residual_max\": " << finite_or_null(s.residual_max) << ",\n"
        << "  \"wall_time_s\": " << finite_or_null(s.wall_time_s) << ",\n"
        << "  \"model\": " << quote(s.model) << ",\n"
        << "  \"message\": " << quote(s.message) << ",\n"
        << "  \"final_time\": " << finite_or_null(s.final_time) << ",\n"
        << "  \"bracket\": [" << number_or_null(s.bracket_lo) << ", " << number_or_null(s.bracket_hi) << "],\n"
        << "  \"residual_a\": " << finite_or_null(s.residual_a) << ",\n"
        << "  \"residual_threshold\": " << finite_or_null(s.residual_threshold) << ",\n"
        << "  \"windows\": " << s.windows << ",\n"
        << "  \"rejected_windows\": " << s.rejected_windows << ",\n"
        << "  \"min_juvenile\": " << number_or_null(s.min_juvenile) << ",\n"
        << "  \"balance_residual_max\": " << number_or_null(s.balance_residual_max) << "\n"
        << "}\n";
}

Summary read_summary(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("summary JSON: ") + e.what());
    }
    auto num = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        return j[key].get<double>();
    };
    Summary s;
    s.verdict = j.at("verdict").get<std::string>();
    s.t_bu_estimate = num("t_bu_estimate");
    s.max_sup_norm = num("max_sup_norm").value_or(std::numeric_limits<double>::quiet_NaN());
    s.residual_max = num("residual_max").value_or(std::numeric_limits<double>::quiet_NaN());
    s.wall_time_s = num("wall_time_s").value_or(0.0);
    if (j.contains("model")) s.model = j["model"].get<std::string>();
    if (j.contains("message")) s.message = j["message"].get<std::string>();
    s.final_time = num("final_time").value_or(0.0);
    if (j.contains("bracket") && j["bracket"].is_array() && j["bracket"].size() == 2) {
        if (!j["bracket"][0].is_null()) s.bracket_lo = j["bracket"][0].get<double>();
        if (!j["bracket"][1].is_null()) s.bracket_hi = j["bracket"][1].get<double>();
    }
    s.residual_a = num("residual_a").value_or(0.0);
    s.residual_threshold = num("residual_threshold").value_or(0.0);
    if (j.contains("windows")) s.windows = j["windows"].get<std::size_t>();
    if (j.contains("rejected_windows")) s.rejected_windows = j["rejected_windows"].get<std::size_t>();
    s.min_juvenile = num("min_juvenile");
    s.balance_residual_max = num("balance_residual_max");
    return s;
}

}  // namespace sdde
