#pragma once

#include <stdexcept>
#include <string>

namespace stressnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or parameter shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Value outside the mathematical domain of an operation (zero MAPE target, degenerate stats).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// backward() called without a matching forward().
class StaleCacheError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing dataset files, or a record that cannot feed the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN/Inf.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace stressnet
