#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace percept {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File missing or unreadable/unwritable.
class FileError : public Error {
 public:
  using Error::Error;
};

/// A row in an annotation file violates the schema.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string column, std::string reason)
      : Error("schema error at line " + std::to_string(line) + ", column '" +
              column + "': " + reason),
        line(line),
        column(std::move(column)),
        reason(std::move(reason)) {}

  std::size_t line;
  std::string column;
  std::string reason;
};

class DuplicateAnnotationIdError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class InsufficientRatersError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class DegenerateVarianceError : public Error {
 public:
  using Error::Error;
};

class EmptyGroupError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Bad or unknown key in a simulation/config file.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string key = "")
      : Error(what), key(std::move(key)) {}

  std::string key;
};

}  // namespace percept
