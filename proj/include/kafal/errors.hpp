#pragma once

#include <stdexcept>
#include <string>

namespace kafal {

// Exit codes used by the CLI. Library code throws the matching exception.
enum class exit_code : int {
    ok = 0,
    config = 2,
    data_format = 3,
    numeric = 4,
};

// Bad configuration or invalid arguments (shapes, ranges, missing keys).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (e.g. a truncated or mislabelled IDX file).
struct data_error : std::runtime_error {
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure mid-run (NaN gradient). Carries round/client context.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace kafal
