#pragma once

#include <stdexcept>
#include <string>

namespace deepdetect {

// Precondition violations on arguments (shapes, ranges, names).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class IoErrorKind { MissingFile, MalformedHeader, UnsupportedFormat, WriteFailed };

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IoErrorKind kind() const noexcept { return kind_; }

 private:
  IoErrorKind kind_;
};

enum class ParseErrorKind { TokenCount, NonNumeric, SingularMatrix };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ParseErrorKind kind() const noexcept { return kind_; }

 private:
  ParseErrorKind kind_;
};

// Projection of a point whose homogeneous coordinate vanishes.
class PointAtInfinity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UndefinedRatio : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deepdetect
