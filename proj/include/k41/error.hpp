#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace k41 {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameter or configuration value; `key()` names the offender.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Malformed configuration text (as opposed to a schema violation).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A coefficient became NaN or overflowed while integrating.
class NumericalBlowup : public Error {
 public:
  explicit NumericalBlowup(std::int64_t step)
      : Error("numerical blowup at step " + std::to_string(step)), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Statistics of the zero field, for which ratios such as theta are undefined.
class DegenerateMeasure : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a closed form.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the requested dimension or stepper.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A verification contract was not met.
class VerificationFailure : public Error {
 public:
  using Error::Error;
};

/// Checkpoint decoding failure.
class FormatError : public Error {
 public:
  enum class Kind { magic, version, truncated, invariant };
  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace k41
