#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bellsim {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `line()` is the 1-based line of the
/// offending entry when the error comes from a config file, 0 otherwise.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input data violates an operation's precondition (unsorted events,
/// missing measurements, empty windows, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (cannot open, short write).
class IoError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  bad_magic,
  bad_version,
  bad_header,
  truncated,
  bad_record,
  order_violation,
  trailing_bytes,
};

const char* to_string(FormatErrorKind kind) noexcept;

/// Malformed event file. `offset()` is the byte offset at which the
/// problem was detected.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, std::uint64_t offset, const std::string& detail);
  FormatErrorKind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  FormatErrorKind kind_;
  std::uint64_t offset_;
};

}  // namespace bellsim
