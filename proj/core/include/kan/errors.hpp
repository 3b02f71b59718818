#pragma once

#include <stdexcept>
#include <string>

namespace kan {

/// Invalid specification or configuration (bad p, non-positive eta, ...).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad call arguments or data (dimension mismatch, empty dataset, ...).
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values or divergence during numerical work.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed external file (IDX magic, truncated payload, CSV shape).
class format_error : public std::runtime_error {
public:
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace kan
