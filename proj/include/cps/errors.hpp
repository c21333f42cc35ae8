#pragma once

#include <stdexcept>
#include <string>

namespace cps {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid numeric parameter (non-positive scale, even kernel size, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Non-finite or otherwise unusable input value.
class InputError : public Error {
public:
  using Error::Error;
};

/// Shape mismatch between operators and signals.
class ContractError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation (log of zero, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Non-finite iterate inside the solver.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, int iteration)
      : Error(what), iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

private:
  int iteration_;
};

} // namespace cps
