#pragma once

#include <stdexcept>
#include <string>

namespace rvetherm {

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// RSA could not place an inclusion within the attempt budget.
struct PlacementExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Defect-radius bisection could not reach the target window.
struct CalibrationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergence : std::runtime_error {
    NonConvergence(const std::string& msg, double eps_eq, double eps_comp)
        : std::runtime_error(msg), eps_eq(eps_eq), eps_comp(eps_comp) {}
    double eps_eq;
    double eps_comp;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line = 0, int column = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) +
                                            (column > 0 ? ":" + std::to_string(column) : "") + ": " + msg
                                      : msg),
          line(line), column(column) {}
    int line;
    int column;
};

struct BatchFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rvetherm
