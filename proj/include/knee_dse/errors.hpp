#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace knee_dse {

/// Base of every error thrown by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A configuration or argument violates a documented invariant.
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// Malformed text input. `line()` is 1-based; 0 when no line applies.
class ParseError : public ValidationError
{
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line)
    {
    }

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error
{
public:
    using Error::Error;
};

/// A table-backed timing model was queried for a geometry it has no entry for.
class CalibrationError : public Error
{
public:
    using Error::Error;
};

} // namespace knee_dse
