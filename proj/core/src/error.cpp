#include "bmpc/error.hpp"

namespace bmpc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kCombinatorialLimit: return "combinatorial limit";
    case ErrorCode::kSingular: return "singular matrix";
    case ErrorCode::kNotPsd: return "not positive semidefinite";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kOutsideDomain: return "outside domain";
    case ErrorCode::kNotConverged: return "not converged";
    case ErrorCode::kDegenerate: return "degenerate active set";
    case ErrorCode::kIo: return "i/o failure";
    case ErrorCode::kParse: return "parse error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

bool Error::is_config_error() const noexcept {
  switch (code_) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kCombinatorialLimit:
    case ErrorCode::kNotPsd:
    case ErrorCode::kIo:
    case ErrorCode::kParse:
      return true;
    default:
      return false;
  }
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace bmpc
