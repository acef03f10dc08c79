#pragma once

#include <stdexcept>
#include <string>

namespace fogrl {

// Base for all recoverable errors raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the offending line when known.
class ParseError : public Error {
public:
  ParseError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

// A contract precondition was violated by the caller.
class ContractError : public Error {
public:
  explicit ContractError(const std::string& what) : Error(what) {}
};

// Numerically degenerate input (all-zero snapshots, zero duration, ...).
class DegenerateInputError : public Error {
public:
  explicit DegenerateInputError(const std::string& what) : Error(what) {}
};

// Training produced a non-finite loss; carries diagnostics.
class NonFiniteLossError : public Error {
public:
  explicit NonFiniteLossError(const std::string& what) : Error(what) {}
};

}  // namespace fogrl
