#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace roiedge {

// Base of every error the library throws. Callers that only care about
// "something went wrong" catch this; the subclasses name the failure class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed tensor / image / trace file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Input that violates an operation precondition (e.g. image smaller than stride).
class InputError : public Error {
 public:
  using Error::Error;
};

// Scalar parameter out of its valid range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Dimension or length mismatch between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Index or coordinate outside a valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Problem too large for exhaustive enumeration.
class SizeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Wire-protocol decode failure. offset is the byte position where decoding
// gave up, relative to the start of the framed message.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace roiedge
