#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace anchortest {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    /// Short machine-readable tag, used when errors are rendered into table cells.
    virtual const char* kind() const noexcept { return "error"; }
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io"; }
};

/// Structurally malformed input (ragged rows, bad header, no rows).
class FormatError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "format"; }
};

/// A cell that does not parse as a finite number. Row and column are zero-based.
class ParseError : public FormatError {
public:
    ParseError(std::size_t row, std::size_t col, const std::string& what)
        : FormatError("row " + std::to_string(row) + ", col " + std::to_string(col) + ": " + what),
          row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    const char* kind() const noexcept override { return "parse"; }

private:
    std::size_t row_;
    std::size_t col_;
};

class DimensionError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "dimension"; }
};

class PairingError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "pairing"; }
};

/// Too few inputs for the operation (n < 2 samples, a single dataset, ...).
class ArityError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "arity"; }
};

class ParameterError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "parameter"; }
};

/// Input is valid but carries no information for the computation (zero variance,
/// singular covariance, fewer distinct rows than clusters).
class DegeneracyError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "degenerate"; }
};

/// The two compared structures coincide exactly, so every paired difference is zero.
class VacuousTestError : public DegeneracyError {
public:
    using DegeneracyError::DegeneracyError;
    const char* kind() const noexcept override { return "vacuous"; }
};

/// Exhaustive-search size guard.
class GuardError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "guard"; }
};

class ManifestError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "manifest"; }
};

/// Endpoint calls that still failed after retries. Carries the failed input indices.
class TransportError : public Error {
public:
    TransportError(const std::string& what, std::vector<std::size_t> failed)
        : Error(what), failed_(std::move(failed)) {}
    const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }
    const char* kind() const noexcept override { return "transport"; }

private:
    std::vector<std::size_t> failed_;
};

}  // namespace anchortest
