#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crosscheck {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --- model gateway ---

// Base for failures worth retrying (rate limits, timeouts, dropped connections).
class TransientError : public Error {
 public:
  using Error::Error;
};

class RateLimitedError : public TransientError {
 public:
  using TransientError::TransientError;
};

class TimeoutError : public TransientError {
 public:
  using TransientError::TransientError;
};

class ConnectionError : public TransientError {
 public:
  using TransientError::TransientError;
};

class UnknownModelError : public Error {
 public:
  using Error::Error;
};

class DuplicateModelIdError : public Error {
 public:
  using Error::Error;
};

class AuthFailureError : public Error {
 public:
  using Error::Error;
};

class MalformedBackendReplyError : public Error {
 public:
  using Error::Error;
};

class TransientExhaustedError : public Error {
 public:
  TransientExhaustedError(const std::string& message, int attempts)
      : Error(message), attempts_(attempts) {}

  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// --- prompt variation ---

class WrongKindError : public Error {
 public:
  using Error::Error;
};

class EmptyReformulationError : public Error {
 public:
  using Error::Error;
};

// --- sampling ---

class EmptyVariantListError : public Error {
 public:
  using Error::Error;
};

class EmptyModelListError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

// --- judging / scoring / mitigation ---

class PreconditionFailedError : public Error {
 public:
  using Error::Error;
};

class UnknownLabelHasNoScoreError : public Error {
 public:
  using Error::Error;
};

class InvalidBlockIndexError : public Error {
 public:
  using Error::Error;
};

// --- evaluation & configuration ---

class SchemaViolationError : public Error {
 public:
  SchemaViolationError(const std::string& message, const std::string& source, std::size_t line)
      : Error(source + ":" + std::to_string(line) + ": " + message), source_(source), line_(line) {}

  explicit SchemaViolationError(const std::string& message) : Error(message), line_(0) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace crosscheck
