#pragma once

#include <stdexcept>
#include <string>

namespace lvtts {

// Base of every error the library raises. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A stage was asked to run without the checkpoint or model it depends on.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace lvtts
