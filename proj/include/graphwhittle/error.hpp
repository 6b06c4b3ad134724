#pragma once

#include <stdexcept>
#include <string>

namespace graphwhittle {

enum class ErrorCode {
  InvalidParameter,
  SingularDensity,
  NotPositiveDefinite,
  Numerical,
  Domain,
  EstimationFailed,
  AssumptionViolation,
  DegenerateInformation,
  Config,
  Io,
};

/// Short machine-readable tag, e.g. "E_INVALID_PARAMETER".
const char* error_tag(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace graphwhittle
