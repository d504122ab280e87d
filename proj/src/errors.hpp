#pragma once

#include <stdexcept>
#include <string>

namespace contpose {

// Base for all library errors; the C API maps subclasses to status codes.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateAxis : public Error {
public:
  using Error::Error;
};

class ShapeMismatch : public Error {
public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
public:
  using Error::Error;
};

class SingularFit : public Error {
public:
  using Error::Error;
};

class InsufficientCoverage : public Error {
public:
  using Error::Error;
};

class LengthMismatch : public Error {
public:
  using Error::Error;
};

class DegenerateConfiguration : public Error {
public:
  using Error::Error;
};

class EmptyInput : public Error {
public:
  using Error::Error;
};

class Diverged : public Error {
public:
  using Error::Error;
};

class TrackingLost : public Error {
public:
  using Error::Error;
};

class MissingManifest : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace contpose
