#pragma once

#include <stdexcept>
#include <string>

namespace cmvspec {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 3; }
};

// Malformed input or violated precondition.
struct ConfigError : Error {
  using Error::Error;
  int exit_code() const override { return 2; }
};

struct NumericError : Error {
  using Error::Error;
  int exit_code() const override { return 3; }
};

// Raised when z sits on the spectrum of the matrix being factored.
struct SingularError : NumericError {
  using NumericError::NumericError;
};

// A numerically checked hypothesis of a lemma did not hold.
struct HypothesisError : Error {
  using Error::Error;
  int exit_code() const override { return 4; }
};

}  // namespace cmvspec
