#pragma once

#include <stdexcept>
#include <string>

namespace careermatch {

/// Broad failure category. Maps one-to-one onto C API status codes and
/// CLI exit codes (validation -> 1, io/protocol -> 2).
enum class ErrorKind {
  kValidation,
  kIo,
  kProtocol,
  kNotFound,
  kConflict,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::kValidation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

/// Remote peer unreachable or answered outside the wire contract.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::kProtocol, what) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error(ErrorKind::kNotFound, what) {}
};

class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& what) : Error(ErrorKind::kConflict, what) {}
};

}  // namespace careermatch
