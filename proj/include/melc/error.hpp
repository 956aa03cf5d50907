#pragma once

#include <stdexcept>
#include <string>

namespace melc {

// Malformed or inconsistent input data (files, dimensions, class sizes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument passed to a library routine.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Model file could not be read back.
class ModelFormatError : public DataError {
 public:
  using DataError::DataError;
};

class ModelVersionError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

}  // namespace melc
