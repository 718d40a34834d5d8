#pragma once

#include <stdexcept>
#include <string>

namespace coxfuse {

// Problems with input data content (files, matrices, labels).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with run configuration (bad keys, bad values).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace coxfuse
