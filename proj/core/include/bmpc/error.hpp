#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmpc {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kCombinatorialLimit,
  kSingular,
  kNotPsd,
  kInfeasible,
  kOutsideDomain,
  kNotConverged,
  kDegenerate,
  kIo,
  kParse,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. The code lets callers (the CLI in
/// particular) distinguish configuration problems from solver failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

  /// True for codes that describe bad input rather than a numerical failure.
  bool is_config_error() const noexcept;

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool ok, ErrorCode code, const char* what) {
  if (!ok) fail(code, what);
}

}  // namespace bmpc
