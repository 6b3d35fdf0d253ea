#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace synthref {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Transport or 5xx failure that persisted through every retry.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::vector<std::string> attempts)
      : Error(what), attempts_(std::move(attempts)) {}

  const std::vector<std::string>& attempts() const { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

// The model kept returning empty text.
class DegenerateOutputError : public Error {
 public:
  using Error::Error;
};

// The backend cannot perform the requested kind of call.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// The backend answered, but not in the shape the protocol requires.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class RenderError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Correlation inputs leave nothing to compute (e.g. every document skipped).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace synthref
