#pragma once

#include <stdexcept>
#include <string>

namespace vactof {

// Raised when a run configuration (file or flags) is invalid. Maps to CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numerical procedure fails to converge or a tabulation is too
// coarse to satisfy its accuracy contract. Maps to CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace vactof
