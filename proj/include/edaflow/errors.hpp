#pragma once

#include <stdexcept>
#include <string>

namespace edaflow {

// Bad input data: malformed files, invariant violations, degenerate datasets.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A file could not be parsed. `row` is 1-based over data rows (0 = whole file).
class ParseError : public DataError {
public:
    ParseError(const std::string& what, std::size_t row)
        : DataError(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Invalid parameter record (negative widths, cutoff above Nyquist, ...).
class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical solver did not reach its termination criterion.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace edaflow
