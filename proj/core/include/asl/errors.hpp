#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace asl {

// Malformed serialized input. byte_offset points at the offending byte.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : std::runtime_error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          byte_offset(byte_offset) {}

    std::size_t byte_offset;
};

// Non-finite value produced during numeric computation. The message carries
// the location (pixel coordinate, training step, ...) of the first offender.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

} // namespace asl
