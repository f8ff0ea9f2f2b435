#pragma once

#include <stdexcept>
#include <string>

namespace groklab {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated preconditions (bad index, bad fraction, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Invalid or unknown configuration keys/values. The CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-finite values, zero normalizer, degenerate spectra.
/// The CLI maps this to exit code 1.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace groklab
