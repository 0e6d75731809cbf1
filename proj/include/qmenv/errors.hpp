#pragma once

#include <stdexcept>
#include <string>

namespace qmenv {

// Domain failures map to CLI exit code 1, parse/IO failures to exit code 2.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Unknown command, outcome, or label.
class LookupError : public Error {
  public:
    using Error::Error;
};

/// Set containment / map domain violations.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// Numeric parameter outside its admissible range.
class ParameterError : public Error {
  public:
    using Error::Error;
};

class ShapeError : public Error {
  public:
    using Error::Error;
};

/// Model fails its invariants where a valid model is required.
class ValidationError : public Error {
  public:
    using Error::Error;
};

class ConditioningError : public Error {
  public:
    using Error::Error;
};

class PreconditionError : public Error {
  public:
    using Error::Error;
};

class CompositionError : public Error {
  public:
    using Error::Error;
};

class UnsupportedModelError : public Error {
  public:
    using Error::Error;
};

class InsufficientDataError : public Error {
  public:
    using Error::Error;
};

class PolicyError : public Error {
  public:
    using Error::Error;
};

/// Malformed input text. `line` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace qmenv
