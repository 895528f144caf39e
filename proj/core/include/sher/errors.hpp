#pragma once

#include <stdexcept>
#include <string>

namespace sher {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of a function was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A joint configuration or rate left its admissible box.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Degenerate geometry (zero-length tool axis, bad phantom).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Non-finite sensor reading.
class SensorError : public Error {
 public:
  using Error::Error;
};

// Invalid or unreadable configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or unsupported wire message.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace sher
