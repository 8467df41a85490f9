#pragma once

#include <stdexcept>
#include <string>

namespace causalembed {

// Base error carrying a short machine-parsable code plus a human-readable
// message. The CLI prints these as "<code>: <message>" on one line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& message)
      : Error("E_DIMENSION", message) {}
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& message)
      : Error("E_NOT_SPD", message) {}
};

struct NotSymmetric : Error {
  explicit NotSymmetric(const std::string& message)
      : Error("E_NOT_SYMMETRIC", message) {}
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& message)
      : Error("E_INVALID_ARGUMENT", message) {}
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& message)
      : Error("E_EMPTY_INPUT", message) {}
};

struct MissingColumn : Error {
  explicit MissingColumn(const std::string& message)
      : Error("E_MISSING_COLUMN", message) {}
};

struct NonFiniteLoss : Error {
  explicit NonFiniteLoss(const std::string& message)
      : Error("E_NONFINITE_LOSS", message) {}
};

struct RoleMismatch : Error {
  explicit RoleMismatch(const std::string& message)
      : Error("E_ROLE_MISMATCH", message) {}
};

struct MissingRegressor : Error {
  explicit MissingRegressor(const std::string& message)
      : Error("E_MISSING_REGRESSOR", message) {}
};

struct InvalidDistribution : Error {
  explicit InvalidDistribution(const std::string& message)
      : Error("E_INVALID_DISTRIBUTION", message) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& message)
      : Error("E_CONFIG", message) {}
};

struct DataFormatError : Error {
  explicit DataFormatError(const std::string& message)
      : Error("E_DATA_FORMAT", message) {}
};

struct IoError : Error {
  explicit IoError(const std::string& message) : Error("E_IO", message) {}
};

}  // namespace causalembed
