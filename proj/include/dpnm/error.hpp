// error.hpp — exception types shared by the pipeline

#pragma once

#include <stdexcept>
#include <string>

namespace dpnm {

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dpnm
