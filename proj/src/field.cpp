#include "sdde/field.hpp"

#include "sdde/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sdde {

Grid::Grid(std::size_t n) : n_(n) {
    if (n == 0) throw ValidationError("grid size must be positive");
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Field constant_field(std::size_t n, double value) { return Field(n, value); }

InitialData::InitialData(std::size_t grid_size, Fn fn, std::string description)
    : n_(grid_size), fn_(std::make_shared<const Fn>(std::move(fn))), description_(std::move(description)) {
    if (grid_size == 0) throw ValidationError("initial data needs a non-empty grid");
    if (!*fn_) throw ValidationError("initial data callable is empty");
}

void InitialData::sample(double t, std::span<double> out) const {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = (*fn_)(t, j);
}

Field InitialData::sample(double t) const {
    Field out(n_);
    sample(t, out);
    return out;
}

double Preset::evaluate(double t, double x) const {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(k) * x;
    const double modulation = a * std::cos(phase);
    switch (kind) {
        case Kind::Constant: return c + modulation;
        case Kind::Linear: return c + b * t + modulation;
        case Kind::Exponential: return c * std::exp(r * t) + modulation;
        case Kind::Sinusoid: return c + a * std::sin(omega * t + phase);
    }
    return 0.0;
}

InitialData Preset::as_initial_data(const Grid& grid) const {
    const Preset self = *this;
    return InitialData(
        grid.size(), [self, grid](double t, std::size_t j) { return self.evaluate(t, grid.position(j)); },
        describe());
}

Field Preset::as_field(const Grid& grid) const {
    Field out(grid.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = evaluate(0.0, grid.position(j));
    return out;
}

std::string Preset::describe() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Constant: os << "constant(c=" << c; break;
        case Kind::Linear: os << "linear(c=" << c << ",b=" << b; break;
        case Kind::Exponential: os << "exponential(c=" << c << ",r=" << r; break;
        case Kind::Sinusoid: os << "sinusoid(c=" << c << ",omega=" << omega; break;
    }
    os << ",a=" << a << ",k=" << k << ")";
    return os.str();
}

}  // namespace sdde
