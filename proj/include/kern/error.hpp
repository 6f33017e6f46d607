#pragma once

#include <stdexcept>
#include <string>

namespace kern {

// Error taxonomy, mirrored by the CLI exit codes:
//   ShapeError / ValidationError / IoError -> exit 2
//   NumericError and write failures        -> exit 3
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace kern
