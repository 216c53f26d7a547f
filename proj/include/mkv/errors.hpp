#pragma once

#include <stdexcept>
#include <string>

namespace mkv {

/// Malformed or inconsistent run configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite state or other numerical breakdown during a run (CLI exit code 3).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The adjoint mean is statistically indistinguishable from zero, so no
/// worst-case direction can be resolved (CLI exit code 4).
class FlatCriterionError : public std::runtime_error {
public:
    explicit FlatCriterionError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mkv
