#pragma once

#include <stdexcept>
#include <string>

namespace slt {

// Raised when operand shapes do not satisfy an operation's contract.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an operation produces a non-finite value (NaN/Inf).
class NumericFault : public std::runtime_error {
public:
    explicit NumericFault(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed or corrupt files (IDX, SLTM, SLTW, run dirs).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on invalid configuration values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace slt
