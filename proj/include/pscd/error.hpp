#pragma once

#include <stdexcept>
#include <string>

namespace pscd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Frame ids / ordering / coverage violations.
class StructureError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An operation needing a non-empty descriptor pool got an empty one
/// (nearest neighbor pool, NBNN class, experience set, donor pool).
class EmptyPoolError : public Error {
 public:
  using Error::Error;
};

/// SVM training was asked to learn from a single class.
class OneSidedTrainingError : public Error {
 public:
  using Error::Error;
};

/// A place region produced no non-nuisance examples.
class UntrainablePlaceError : public Error {
 public:
  using Error::Error;
};

class NoRelevantPairError : public Error {
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

}  // namespace pscd
