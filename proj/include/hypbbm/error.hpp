#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypbbm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A half-plane point whose disk image cannot be stored with |z| < 1 in
/// double precision. Callers should stay in the logarithmic chart.
class OverflowNearBoundary : public Error {
 public:
  using Error::Error;
};

class PopulationCapExceeded : public Error {
 public:
  PopulationCapExceeded(std::size_t cap, double lambda, double horizon);
  std::size_t cap() const noexcept { return cap_; }

 private:
  std::size_t cap_;
};

class OutOfHorizon : public Error {
 public:
  using Error::Error;
};

class UnknownAddress : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Raised for operations that only make sense in the transient regime
/// lambda <= 1/8.
class WrongRegime : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what);
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace hypbbm
