#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bmpc/condense.hpp"

namespace bmpc::cli {

struct CheckResult {
  std::string name;
  bool passed = true;
  bool skipped = false;
  std::string detail;  ///< summary on success, violated invariant and witness on failure
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  int grid = 12;  ///< per-dimension resolution of state grids
};

/// Every module's invariant checks on the given problem.
std::vector<CheckResult> run_verify_suite(const MpcSpec& spec, const VerifyOptions& options);

}  // namespace bmpc::cli
