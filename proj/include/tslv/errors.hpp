#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tslv {

// Stable failure taxonomy. Every error surfaced by the library derives from
// Error so callers (and the C bindings) can map failures onto fixed status
// codes without string matching.
enum class ErrorCode : int {
  Io = 1,          // file could not be read / written
  Parse = 2,       // malformed expression or model document
  Validation = 3,  // well-formed document violating a structural rule
  Domain = 4,      // argument outside an operation's documented domain
  Hypothesis = 5,  // a closed-form bound's hypothesis fails (e.g. log of <= 0)
  Simulation = 6,  // trajectory left the admissible region / config mismatch
  Usage = 7,       // bad call sequence or bad option combination
  Internal = 8,    // invariant breach; indicates a bug
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorCode::Io, m) {}
};

// Carries the character offset (0-based) of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& m, std::size_t position)
      : Error(ErrorCode::Parse, m + " (position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m) : Error(ErrorCode::Validation, m) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error(ErrorCode::Domain, m) {}
};

class HypothesisError : public Error {
 public:
  explicit HypothesisError(const std::string& m) : Error(ErrorCode::Hypothesis, m) {}
};

class SimulationError : public Error {
 public:
  explicit SimulationError(const std::string& m) : Error(ErrorCode::Simulation, m) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& m) : Error(ErrorCode::Usage, m) {}
};

}  // namespace tslv
