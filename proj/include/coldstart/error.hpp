#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coldstart {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input that parses but violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operand shapes that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A NaN or infinity produced by a named primitive.
class NumericError : public Error {
public:
    NumericError(const std::string& primitive, const std::string& detail)
        : Error("non-finite value in " + primitive + ": " + detail), primitive_(primitive) {}
    const std::string& primitive() const noexcept { return primitive_; }

private:
    std::string primitive_;
};

/// The interactive annotation session went away while the engine waited on it.
class SessionAborted : public Error {
public:
    using Error::Error;
};

}  // namespace coldstart
