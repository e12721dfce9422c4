#pragma once

#include <stdexcept>
#include <string>

namespace sphdiff {

// Bad or inconsistent user configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Window boundary meets the lattice projection (CLI exit code 3).
struct RegularityError : std::runtime_error {
    explicit RegularityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation could not reach the requested accuracy; carries the
// measured bound so callers can report it (CLI exit code 4).
struct AccuracyError : std::runtime_error {
    AccuracyError(const std::string& msg, double measured)
        : std::runtime_error(msg), measured_bound(measured) {}
    double measured_bound;
};

// A stated precondition does not hold (e.g. sample region too small).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sphdiff
