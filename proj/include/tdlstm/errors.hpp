#pragma once

#include <stdexcept>
#include <string>

namespace tdlstm {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed corpus or embedding file; message carries the line/record.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A precondition on argument values was violated.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Operation invoked in the wrong state (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Gradient keys do not match the trainable parameter set.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint could not be read back (bad magic, version, variant, truncation).
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or parameters during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace tdlstm
