#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace themescope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input detected before any work started: malformed config, missing
/// predecessor artifacts, closed-set violations in input rows.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A record in an input file could not be parsed. `line()` is 1-based, 0 when
/// the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Failure talking to a chat-completion backend.
class BackendError : public Error {
 public:
  enum class Kind {
    Transport,         // connection failure or retryable HTTP status (5xx, 429)
    Timeout,
    Status,            // non-retryable HTTP status
    Envelope,          // response body lacks choices[0].message.content
    RetriesExhausted,
  };

  BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return kind_ == Kind::Transport || kind_ == Kind::Timeout; }

 private:
  Kind kind_;
};

}  // namespace themescope
