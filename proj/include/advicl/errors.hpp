#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advicl {

// Root of every error raised by the library. Callers that only need a
// diagnostic can catch this; the subclasses exist for control flow.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// prompt model
class SlotOutOfRange : public Error {
 public:
  using Error::Error;
};
class MalformedDemoContent : public Error {
 public:
  using Error::Error;
};

// backends
class TransportError : public Error {
 public:
  using Error::Error;
};
class ProviderError : public Error {
 public:
  ProviderError(int status, const std::string& message)
      : Error("provider error (status " + std::to_string(status) + "): " + message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};
class RateLimited : public ProviderError {
 public:
  explicit RateLimited(const std::string& message) : ProviderError(429, message) {}
};
class LogprobsUnsupported : public Error {
 public:
  using Error::Error;
};
class CacheIoError : public Error {
 public:
  using Error::Error;
};
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// loss / modifier / optimizer
class EmptyBatch : public Error {
 public:
  using Error::Error;
};
class NoVariantsFound : public Error {
 public:
  using Error::Error;
};
class InsufficientPool : public Error {
 public:
  using Error::Error;
};

// theory sandbox
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// cli / io
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};
class EmptyDataset : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace advicl
