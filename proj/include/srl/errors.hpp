// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every srl module. Each category maps onto a
// stable CLI exit code (see cli.hpp).

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Rank or structural shape problem (e.g. a non-scalar loss root).
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A value outside an operation's mathematical domain, e.g. log(-1).
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// NaN or other non-finite intermediate.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Empty or otherwise unusable input to an operation.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Dataset content cannot satisfy a request (missing features, empty pools).
class DataError : public Error {
 public:
  using Error::Error;
};

/// On-disk layout does not match the dataset format.
class FormatError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), file_(file), line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

/// Optimizer invoked with inconsistent state or gradients.
class StateError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
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

}  // namespace srl
