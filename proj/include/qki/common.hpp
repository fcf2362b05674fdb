#pragma once

#include <stdexcept>
#include <string>

namespace qki {

inline constexpr const char* kVersion = "0.1.0";

/// Requested problem size exceeds what the simulator supports.
class capacity_error : public std::runtime_error {
public:
    explicit capacity_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or out-of-range experiment configuration.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File could not be read, written, or parsed.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qki
