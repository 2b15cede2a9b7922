#pragma once

#include <stdexcept>
#include <string>

namespace fassmvs {

// Bad input data: unreadable/malformed files, invalid calibration values,
// mismatched map dimensions. CLI exit code 1.
struct InvalidInputError : std::runtime_error {
    explicit InvalidInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent configuration: unsupported flag combinations, bad parameter
// ranges. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate viewing geometry: zero baselines, orientation flips of the
// sweep, epipole collapsing onto the sampled segment. CLI exit code 1.
struct GeometryError : std::runtime_error {
    explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fassmvs
