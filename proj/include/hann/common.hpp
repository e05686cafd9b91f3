#pragma once

#include <stdexcept>
#include <string>

namespace hann {

/// Sign convention used everywhere: sgn(0) = +1. All tie-breaking in the
/// library flows from this single rule.
inline int sgn(double t) { return t >= 0.0 ? +1 : -1; }

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The constraint system has no solution (within the supported box).
struct InfeasibleError : Error {
    explicit InfeasibleError(const std::string& msg) : Error(msg) {}
};

/// Iteration cap reached before the requested residual.
struct NotConvergedError : Error {
    NotConvergedError(const std::string& msg, double residual_)
        : Error(msg), residual(residual_) {}
    double residual;
};

/// A documented budget guard (problem size, enumeration cap) was exceeded.
struct BudgetError : Error {
    explicit BudgetError(const std::string& msg) : Error(msg) {}
};

}  // namespace hann
