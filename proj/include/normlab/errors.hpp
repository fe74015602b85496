#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace normlab {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (specs, machines, configs, fractions).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : ParseError(0, what) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A search or table would exceed its configured budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// A finite digit source ran out before the requested precision.
class InsufficientPrecision : public Error {
 public:
  using Error::Error;
};

/// An exact comparison could not be decided within the refinement cap.
class TieUnresolvable : public Error {
 public:
  using Error::Error;
};

/// A documented invariant was observed to be violated at run time.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// A codec failed its decode(encode(w)) == w check.
class CodecError : public Error {
 public:
  using Error::Error;
};

}  // namespace normlab
