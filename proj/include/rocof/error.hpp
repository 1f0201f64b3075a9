#pragma once

#include <stdexcept>
#include <string>

namespace rocof {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Grid file could not be parsed or violates a per-field constraint.
class GridParseError : public Error {
public:
  GridParseError(std::string message, std::string offending_id = {})
      : Error(std::move(message)), offending_id_(std::move(offending_id)) {}

  const std::string& offending_id() const noexcept { return offending_id_; }

private:
  std::string offending_id_;
};

/// A downstream operation was handed a grid that failed validation.
class InvalidGridError : public Error {
public:
  using Error::Error;
};

/// Bad argument to an operation (unknown bus, dimension mismatch, ...).
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Something that is provably impossible on a valid grid happened anyway,
/// e.g. a numerically singular B_BB on a connected network.
class InternalConsistencyError : public Error {
public:
  using Error::Error;
};

/// The largest initial RoCoF was found at a load bus.
class ModelAssumptionBreach : public Error {
public:
  using Error::Error;
};

}  // namespace rocof
