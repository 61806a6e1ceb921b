#pragma once

#include <stdexcept>
#include <string>

namespace roomlayout {

/// Base class of every error raised by the library. `exit_code()` is the
/// process status the command-line tool reports for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Malformed or inconsistent configuration (model, training, synthesis).
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// Input data violating a precondition: bad coordinates, degenerate
/// boundaries, unreadable files, shape mismatches.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Non-finite values during optimisation.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

}  // namespace roomlayout
