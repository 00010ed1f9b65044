#pragma once

#include <stdexcept>
#include <string>

namespace orars {

// Base for every error the library raises on bad input or I/O.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed record or file; message carries the record index.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Type invariant violated; message names the utterance and invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Checkpoint header names an unsupported format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

// Correlation on a constant sequence.
class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

}  // namespace orars
