#pragma once

#include <stdexcept>
#include <string>

namespace hrdyn {

// Base class for every error raised by the library. The CLI maps
// ConfigError/InputError/ParseError to exit code 1 and everything else to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: bad band edges, inconsistent model config, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data violates a precondition (too short, mismatched lengths, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

// Zero-variance or all-zero segment; callers usually drop the segment.
class DegenerateSegmentError : public InputError {
 public:
  using InputError::InputError;
};

// Tensor shape disagreement. The message names both shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// The histogram estimator was asked for a joint dimension it cannot handle.
class EstimatorChoiceError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. Messages carry the file and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Non-finite values reached a numeric routine (NaN gradient, inf loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace hrdyn
