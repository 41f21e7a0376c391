#include "sdde/spatial.hpp"

#include "sdde/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

namespace sdde {
namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

struct ResolventOperator::Plans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    explicit Plans(std::size_t n) {
        const int len = static_cast<int>(n);
        std::vector<double> real(n);
        std::vector<std::complex<double>> spec(n / 2 + 1);
        auto* spec_ptr = reinterpret_cast<fftw_complex*>(spec.data());
        // ESTIMATE keeps plan choice (and so the arithmetic) reproducible.
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard lock(planner_mutex());
        forward = fftw_plan_dft_r2c_1d(len, real.data(), spec_ptr, flags);
        backward = fftw_plan_dft_c2r_1d(len, spec_ptr, real.data(), flags | FFTW_DESTROY_INPUT);
    }
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward);
        fftw_destroy_plan(backward);
    }
    Plans(const Plans&) = delete;
    Plans& operator=(const Plans&) = delete;
};

double ResolventOperator::eigenvalue(std::size_t k, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / nn;
    return (2.0 - 2.0 * std::cos(theta)) * nn * nn;
}

ResolventOperator::ResolventOperator(double eps, std::size_t n) : eps_(eps), n_(n) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ValidationError("resolvent eps must be >= 0");
    if (n == 0) throw ValidationError("resolvent grid must be non-empty");
    symbol_.resize(n / 2 + 1);
    for (std::size_t k = 0; k < symbol_.size(); ++k) symbol_[k] = 1.0 / (1.0 + eps * eigenvalue(k, n));
    symbol_[0] = 1.0;
    if (eps > 0.0 && n > 1) plans_ = std::make_shared<const Plans>(n);
}

ResolventOperator::~ResolventOperator() = default;
ResolventOperator::ResolventOperator(const ResolventOperator&) = default;
ResolventOperator& ResolventOperator::operator=(const ResolventOperator&) = default;
ResolventOperator::ResolventOperator(ResolventOperator&&) noexcept = default;
ResolventOperator& ResolventOperator::operator=(ResolventOperator&&) noexcept = default;

void ResolventOperator::apply(std::span<const double> g, std::span<double> u) const {
    if (g.size() != n_ || u.size() != n_) throw ValidationError("resolvent input has the wrong size");
    if (!plans_) {
        std::copy(g.begin(), g.end(), u.begin());
        return;
    }
    std::vector<double> real(g.begin(), g.end());
    std::vector<std::complex<double>> spec(n_ / 2 + 1);
    auto* spec_ptr = reinterpret_cast<fftw_complex*>(spec.data());
    fftw_execute_dft_r2c(plans_->forward, real.data(), spec_ptr);
    const double norm = 1.0 / static_cast<double>(n_);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= symbol_[k] * norm;
    fftw_execute_dft_c2r(plans_->backward, spec_ptr, u.data());
}

Field ResolventOperator::apply(std::span<const double> g) const {
    Field u(n_);
    apply(g, u);
    return u;
}

Eigen::MatrixXd resolvent_matrix(const ResolventOperator& op) {
    const std::size_t n = op.size();
    if (n > kDenseOracleLimit) throw SizeError("dense resolvent limited to N <= 256");
    const auto dim = static_cast<Eigen::Index>(n);
    const double nn = static_cast<double>(n);
    const double a = op.eps() * nn * nn;
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        system(j, j) += 2.0 * a;
        system(j, (j + 1) % dim) -= a;
        system(j, (j + dim - 1) % dim) -= a;
    }
    return system.partialPivLu().inverse();
}

}  // namespace sdde
