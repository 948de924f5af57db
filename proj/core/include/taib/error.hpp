#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taib {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented contract (unlabeled person, unknown
/// feature, single-class data, ...). Maps to CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line number of the offending row.
class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& what);
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Bad invocation: unknown format, malformed flag value. Maps to exit code 2.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Numerical failure during training (non-finite loss).
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace taib
