#pragma once

#include <stdexcept>
#include <string>

namespace xbma {

// Bad input: illegal genotype codes, malformed files, out-of-range options.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: singular designs, bracketing failures, non-convergence.
// The CLI maps these (and any other runtime failure) to exit code 2.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace xbma
