#pragma once

#include <stdexcept>
#include <string>

namespace lppl {

// Bad input data or arguments supplied from outside the library (CLI exit code 2).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Calibration could not produce a usable fit (CLI exit code 3).
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, std::string diagnostics = {})
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

    const std::string& diagnostics() const noexcept { return diagnostics_; }

private:
    std::string diagnostics_;
};

}  // namespace lppl
