#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace qurious {

/// Base of every error the library raises for bad input, bad files or
/// failed contracts. Anything else escaping the library is an internal bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed record in a text input. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Wrong magic, version or structural field in a binary file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter or longer than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise unusable numeric data (NaN, Inf, zero rows).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain (dimension mismatch, zero vector,
/// out-of-range parameter, unknown id).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A remote peer answered, but not in the shape the protocol requires.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// HTTP-level failure talking to an embedding service.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, std::string body, bool retryable)
      : Error(what), status_(status), body_(std::move(body)), retryable_(retryable) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int status_;
  std::string body_;
  bool retryable_;
};

/// Threshold criterion needs at least one positive label.
class NoPositivesError : public Error {
 public:
  using Error::Error;
};

}  // namespace qurious
