#pragma once

#include <stdexcept>
#include <string>

namespace kfp {

// Input/contract violations: bad config values, malformed files, out-of-domain arguments.
// CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures detected at run time: non-convergence, refused near-singular solves,
// overflow guards, failed extrapolation. CLI maps these to exit code 2 with a
// machine-readable error summary.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace kfp
