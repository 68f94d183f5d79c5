#pragma once

#include <stdexcept>
#include <string>

namespace rhclus {

/// Failure classes surfaced by the pipeline. The CLI maps each class to a
/// distinct exit code.
enum class ErrorKind { usage, io, schema, numeric };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorKind::schema, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

// Sink for non-fatal diagnostics (dropped columns, clamped partition counts).
// Defaults to stderr; tests swap it out to capture messages.
using WarningSink = void (*)(const std::string&);
void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace rhclus
