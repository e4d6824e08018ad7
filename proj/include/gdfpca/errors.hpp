#pragma once

#include <stdexcept>
#include <string>

namespace gdfpca {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape or index mismatch between inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input violates a domain precondition (non-increasing grid, even Fourier
// count, kappa out of range, ...).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// The regression design F(f)'F(f) is numerically singular, e.g. constant f.
class SingularDesignError : public Error {
 public:
  using Error::Error;
};

// D(beta) is singular, e.g. beta == 0 or a common annihilating lag pattern.
class DegenerateLoadingsError : public Error {
 public:
  using Error::Error;
};

// The factor minimizer collapsed to a constant vector.
class DegenerateFactorError : public Error {
 public:
  using Error::Error;
};

// Input carries no usable variation (constant score matrix, zero-variance
// column under scaling, zero total variance).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// CSV parsing failure; the message carries the 1-based row/column location.
class CsvError : public Error {
 public:
  using Error::Error;
};

// Configuration validation failure; message lists every violated field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gdfpca
