#pragma once

#include <stdexcept>
#include <string>

namespace pedcc {

// Error taxonomy mirrored by CLI exit codes: validation 2, numeric 3, io 4.
struct validation_error : std::runtime_error {
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pedcc
