#pragma once

#include <stdexcept>
#include <string>

namespace accident {

/// Base for every error raised by the library. `kind()` is a stable
/// short tag used by the CLI to map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// A domain invariant failed. `field()` names the offending field so callers
/// (and tests) can tell which invariant broke.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& detail)
      : Error("validation", field + ": " + detail), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

class CorruptionError : public Error {
 public:
  explicit CorruptionError(const std::string& what) : Error("corruption", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

/// A metric is mathematically undefined for the given input.
class UndefinedError : public Error {
 public:
  explicit UndefinedError(const std::string& what) : Error("undefined", what) {}
};

class MissingPrerequisiteError : public Error {
 public:
  explicit MissingPrerequisiteError(const std::string& what)
      : Error("missing_prerequisite", what) {}
};

/// Transport-level failure after all retries were used.
class DeliveryError : public Error {
 public:
  explicit DeliveryError(const std::string& what) : Error("delivery", what) {}
};

/// The endpoint answered, but not with something usable.
class RemoteError : public Error {
 public:
  explicit RemoteError(const std::string& what) : Error("remote", what) {}
};

}  // namespace accident
