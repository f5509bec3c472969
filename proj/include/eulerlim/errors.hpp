#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eulerlim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NegativeRate : public Error {
 public:
  using Error::Error;
};

/// A parameter identity required by a model family does not hold.
class ConstraintViolated : public Error {
 public:
  ConstraintViolated(std::string identity, const std::string& detail)
      : Error("constraint violated: " + identity + " (" + detail + ")"),
        identity_(std::move(identity)) {}
  const std::string& identity() const noexcept { return identity_; }

 private:
  std::string identity_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string field, const std::string& what)
      : Error("schema error in '" + field + "': " + what),
        field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class SizeExceeded : public Error {
 public:
  using Error::Error;
};

class OutsideDomain : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class ConservationBroken : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class InadmissibleState : public Error {
 public:
  InadmissibleState(std::size_t cell, double time, const std::string& what)
      : Error("inadmissible state in cell " + std::to_string(cell) +
              " at t=" + std::to_string(time) + ": " + what),
        cell_(cell),
        time_(time) {}
  std::size_t cell() const noexcept { return cell_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t cell_;
  double time_;
};

class NonFiniteFlux : public Error {
 public:
  using Error::Error;
};

class StalledDynamics : public Error {
 public:
  StalledDynamics(double remaining_micro_time)
      : Error("total jump rate vanished with " +
              std::to_string(remaining_micro_time) +
              " microscopic time units remaining"),
        remaining_(remaining_micro_time) {}
  double remaining() const noexcept { return remaining_; }

 private:
  double remaining_;
};

class BadBlockSize : public Error {
 public:
  using Error::Error;
};

/// The requested convergence window contains a shock.
class PostShockRefusal : public Error {
 public:
  using Error::Error;
};

}  // namespace eulerlim
