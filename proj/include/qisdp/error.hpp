#pragma once

#include <stdexcept>
#include <string>

namespace qisdp {

enum class ErrorKind {
  InvalidArgument,
  Dimension,
  Parse,
  Io,
  Numerical,
  Model,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorKind::InvalidArgument, what);
}
inline Error dimension_error(const std::string& what) {
  return Error(ErrorKind::Dimension, what);
}
inline Error numerical_error(const std::string& what) {
  return Error(ErrorKind::Numerical, what);
}
inline Error model_error(const std::string& what) {
  return Error(ErrorKind::Model, what);
}

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorKind::Parse,
              line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace qisdp
