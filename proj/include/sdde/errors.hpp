#pragma once

#include <stdexcept>
#include <string>

namespace sdde {

/// Base for every error the engine raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or arguments that violate a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The delay functional is undefined for the given data (bracket failure,
/// threshold exceeding the available survival mass, rebase out of range).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A user or built-in model broke its contract (non-finite output, f <= 0).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Picard iteration did not contract on a window.
class ContractionFailure : public Error {
public:
    ContractionFailure(const std::string& what, double ratio, int iterations)
        : Error(what), ratio_(ratio), iterations_(iterations) {}
    [[nodiscard]] double ratio() const noexcept { return ratio_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double ratio_;
    int iterations_;
};

/// Ordered-pair precondition of the comparison check was violated.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// Dense oracles refuse grids above their size limit.
class SizeError : public Error {
public:
    using Error::Error;
};

/// History queried beyond its current time. Always a solver bug.
class HistoryOverrun : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace sdde
