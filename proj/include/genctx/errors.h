#pragma once

#include <stdexcept>
#include <string>

namespace genctx {

/// Tensor shapes or dimensions that do not agree for an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stored artifact is truncated, corrupted, or fails its checksum.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Network failure talking to a generation backend, after retries.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genctx
