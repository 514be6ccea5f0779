#pragma once

#include <stdexcept>
#include <string>

namespace clcts {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input, violated invariant or precondition. The CLI maps it to
/// exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to a chat-completion endpoint after the retry budget was
/// spent, or missing credentials. The CLI maps it to exit code 2.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Formats "path:line: message".
inline std::string at_line(const std::string& path, std::size_t line,
                           const std::string& message) {
  return path + ":" + std::to_string(line) + ": " + message;
}

}  // namespace clcts
