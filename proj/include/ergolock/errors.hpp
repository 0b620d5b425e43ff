#pragma once

#include <stdexcept>
#include <string>

namespace ergolock {

enum class ErrorKind {
  InvalidArgument,
  TooFar,
  CellMismatch,
  TooShort,
  NotCloseable,
  NonPositiveWeight,
  NetTooLarge,
  InfeasibleCertificate,
  SplitStalled,
  GapTooSmall,
  ConfigError,
  CacheMismatch,
};

const char* to_string(ErrorKind kind);

/// Library error carrying the failing module and operation.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + " in " + where + ": " + detail),
        kind_(kind),
        where_(std::move(where)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

}  // namespace ergolock
