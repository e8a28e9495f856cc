#pragma once

#include <stdexcept>
#include <string>

namespace filtlab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 1-based column range inside an expression's source text.
struct Span {
    int begin = 0;
    int end = 0;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int column)
        : Error(what + " at column " + std::to_string(column)), column_(column) {}
    int column() const noexcept { return column_; }

private:
    int column_;
};

class DomainError : public Error {
public:
    DomainError(const std::string& what, Span span)
        : Error(what + " (columns " + std::to_string(span.begin) + "-" + std::to_string(span.end) +
                ")"),
          span_(span) {}
    Span span() const noexcept { return span_; }

private:
    Span span_;
};

class BracketError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Newton failed on the steady problem; continuation reacts by shrinking its step.
class NewtonDivergence : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

/// A mathematical hypothesis required by an operation does not hold for the given input.
class HypothesisError : public Error {
public:
    using Error::Error;
};

class NoFoldError : public Error {
public:
    using Error::Error;
};

/// f or K saturated during time stepping; signals proximity to blow-up.
class OverflowError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace filtlab
