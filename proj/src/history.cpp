#include "sdde/history.hpp"

#include "sdde/errors.hpp"
#include "sdde/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace sdde {

HistoryFunction::HistoryFunction(InitialData initial)
    : n_(initial.grid_size()), initial_(std::move(initial)) {
    if (!initial_.valid()) throw ValidationError("history needs evaluable initial data");
    times_.push_back(0.0);
    values_.resize(n_);
    initial_.sample(0.0, values_);
    if (!all_finite(values_)) throw ValidationError("initial data is not finite at t = 0");
    serials_.push_back(next_serial_++);
}

std::size_t HistoryFunction::cell_index(double t) const {
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto idx = static_cast<std::size_t>(std::distance(times_.begin(), it));
    return idx == 0 ? 0 : idx - 1;
}

double HistoryFunction::evaluate(double t, std::size_t j) const {
    if (t > times_.back()) {
        std::ostringstream os;
        os << "history overrun: t=" << t << " > current_time=" << times_.back();
        throw HistoryOverrun(os.str());
    }
    if (t < 0.0) return initial_(t, j);
    const std::size_t i = cell_index(t);
    const double ti = times_[i];
    if (t == ti) return values_[i * n_ + j];
    const double w = (t - ti) / (times_[i + 1] - ti);
    return (1.0 - w) * values_[i * n_ + j] + w * values_[(i + 1) * n_ + j];
}

void HistoryFunction::evaluate_field(double t, std::span<double> out) const {
    if (t > times_.back()) {
        std::ostringstream os;
        os << "history overrun: t=" << t << " > current_time=" << times_.back();
        throw HistoryOverrun(os.str());
    }
    if (t < 0.0) {
        initial_.sample(t, out);
        return;
    }
    const std::size_t i = cell_index(t);
    const double ti = times_[i];
    if (t == ti) {
        std::copy_n(values_.data() + i * n_, n_, out.data());
        return;
    }
    const double w = (t - ti) / (times_[i + 1] - ti);
    kernels::lerp(node_values(i), node_values(i + 1), w, out);
}

Field HistoryFunction::evaluate_field(double t) const {
    Field out(n_);
    evaluate_field(t, out);
    return out;
}

void HistoryFunction::append(double t, std::span<const double> values) {
    if (values.size() != n_) throw ValidationError("appended field has the wrong grid size");
    if (!(t > times_.back())) throw ValidationError("history nodes must be strictly increasing");
    times_.push_back(t);
    values_.insert(values_.end(), values.begin(), values.end());
    serials_.push_back(next_serial_++);
}

void HistoryFunction::pop_back() {
    if (times_.size() <= 1) throw std::logic_error("cannot remove the t = 0 node of a history");
    times_.pop_back();
    values_.resize(values_.size() - n_);
    serials_.pop_back();
}

HistoryFunction HistoryFunction::rebase(double s) const {
    if (!(s >= 0.0 && s <= current_time())) {
        std::ostringstream os;
        os << "rebase time " << s << " outside [0, " << current_time() << "]";
        throw DomainError(os.str());
    }
    if (s == 0.0) return *this;
    auto parent = std::make_shared<const HistoryFunction>(*this);
    InitialData shifted(
        n_, [parent, s](double theta, std::size_t j) { return parent->evaluate(s + theta, j); },
        "rebased(" + initial_.description() + ")");
    return HistoryFunction(std::move(shifted));
}

NormWindow NormWindow::with_default_length(double alpha, double fallback, double sample_step) {
    NormWindow w;
    w.alpha = alpha;
    w.length = alpha > 0.0 ? 10.0 / alpha : fallback;
    w.sample_step = sample_step;
    return w;
}

namespace {

// Sorted theta samples in [-length, 0] covering every node of h seen through
// each shift (theta = t_i - shift) and a uniform grid at sample_step through
// the initial era of each shift.
std::vector<double> collect_samples(const HistoryFunction& h, std::span<const double> shifts,
                                    double length, double step) {
    std::vector<double> thetas;
    thetas.push_back(0.0);
    thetas.push_back(-length);
    for (double shift : shifts) {
        for (double ti : h.times()) {
            const double theta = ti - shift;
            if (theta <= 0.0 && theta >= -length) thetas.push_back(theta);
        }
        // Initial era of this shift: absolute times s <= 0, theta = s - shift.
        if (step > 0.0) {
            const double lowest = -length + shift;  // most negative absolute time needed
            for (std::size_t k = 1;; ++k) {
                const double s = -static_cast<double>(k) * step;
                if (s < lowest) break;
                thetas.push_back(s - shift);
            }
        }
    }
    std::sort(thetas.begin(), thetas.end());
    // Shifted node grids can land within round-off of each other; a pair that
    // close would turn the difference quotient into noise.
    const double merge = step > 0.0 ? 1e-9 * step : 1e-12;
    thetas.erase(std::unique(thetas.begin(), thetas.end(),
                             [merge](double a, double b) { return b - a <= merge; }),
                 thetas.end());
    return thetas;
}

double weight(double alpha, double theta) { return std::exp(-alpha * std::abs(theta)); }

}  // namespace

double weighted_sup_norm(const HistoryFunction& h, const NormWindow& w) {
    const double t = h.current_time();
    const double shifts[] = {t};
    const auto thetas = collect_samples(h, shifts, w.length, w.sample_step);
    Field buf(h.grid_size());
    double sup = 0.0;
    for (double theta : thetas) {
        h.evaluate_field(t + theta, buf);
        sup = std::max(sup, weight(w.alpha, theta) * kernels::max_abs(buf));
    }
    return sup;
}

double weighted_lip_seminorm(const HistoryFunction& h, const NormWindow& w) {
    const double t = h.current_time();
    const double shifts[] = {t};
    const auto thetas = collect_samples(h, shifts, w.length, w.sample_step);
    Field prev(h.grid_size()), cur(h.grid_size());
    double lip = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        h.evaluate_field(t + thetas[i], cur);
        kernels::scale(weight(w.alpha, thetas[i]), cur, cur);
        if (i > 0) lip = std::max(lip, kernels::max_abs_diff(cur, prev) / (thetas[i] - thetas[i - 1]));
        std::swap(prev, cur);
    }
    return lip;
}

double weighted_lip_seminorm_difference(const HistoryFunction& h, double t, double s,
                                        const NormWindow& w) {
    const double shifts[] = {t, s};
    const auto thetas = collect_samples(h, shifts, w.length, w.sample_step);
    Field prev(h.grid_size()), cur(h.grid_size()), other(h.grid_size());
    double lip = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        h.evaluate_field(t + thetas[i], cur);
        h.evaluate_field(s + thetas[i], other);
        kernels::axpy(-1.0, other, cur);
        kernels::scale(weight(w.alpha, thetas[i]), cur, cur);
        if (i > 0) lip = std::max(lip, kernels::max_abs_diff(cur, prev) / (thetas[i] - thetas[i - 1]));
        std::swap(prev, cur);
    }
    return lip;
}

double lip_seminorm_on(const HistoryFunction& h, double a, double b, double sample_step) {
    if (!(b > a)) return 0.0;
    NormWindow w;
    w.alpha = 0.0;
    w.length = b - a;
    w.sample_step = sample_step;
    const double shifts[] = {b};
    const auto thetas = collect_samples(h, shifts, w.length, sample_step);
    Field prev(h.grid_size()), cur(h.grid_size());
    double lip = 0.0;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        h.evaluate_field(b + thetas[i], cur);
        if (i > 0) lip = std::max(lip, kernels::max_abs_diff(cur, prev) / (thetas[i] - thetas[i - 1]));
        std::swap(prev, cur);
    }
    return lip;
}

}  // namespace sdde
