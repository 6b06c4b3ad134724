#include "graphwhittle/error.hpp"

namespace graphwhittle {

const char* error_tag(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter: return "E_INVALID_PARAMETER";
    case ErrorCode::SingularDensity: return "E_SINGULAR_DENSITY";
    case ErrorCode::NotPositiveDefinite: return "E_NOT_POSITIVE_DEFINITE";
    case ErrorCode::Numerical: return "E_NUMERICAL";
    case ErrorCode::Domain: return "E_DOMAIN";
    case ErrorCode::EstimationFailed: return "E_ESTIMATION_FAILED";
    case ErrorCode::AssumptionViolation: return "E_ASSUMPTION_VIOLATION";
    case ErrorCode::DegenerateInformation: return "E_DEGENERATE_INFORMATION";
    case ErrorCode::Config: return "E_CONFIG";
    case ErrorCode::Io: return "E_IO";
  }
  return "E_UNKNOWN";
}

}  // namespace graphwhittle
