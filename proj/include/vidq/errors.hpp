#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vidq {

/// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// Unreadable or malformed input. Carries the offending file and 1-based line.
class IoError : public Error {
 public:
  IoError(std::string path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        path_(std::move(path)),
        line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

class RepeatedObservation : public Error {
 public:
  using Error::Error;
};

class UndefinedReward : public Error {
 public:
  using Error::Error;
};

/// Raised by segment selection when every arm has been fully observed.
class LocalizationComplete : public Error {
 public:
  using Error::Error;
};

class EmptyInitialization : public Error {
 public:
  using Error::Error;
};

class EvaluationUnavailable : public Error {
 public:
  using Error::Error;
};

class UndefinedDenominator : public Error {
 public:
  using Error::Error;
};

}  // namespace vidq
