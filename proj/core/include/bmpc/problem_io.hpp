#pragma once

#include <filesystem>
#include <string>

#include "bmpc/condense.hpp"

namespace bmpc {

/// Parses the problem schema
///   {"A": [[..]], "B": [[..]], "Q": .., "R": .., "T": int,
///    "X": {"A": [[..]], "b": [..]}, "U": {"A": [[..]], "b": [..]}}
/// with an optional "hessian": "stage-cost" (default) | "half".
/// Q and R accept a number (times identity), one matrix (broadcast over the
/// horizon), or a list of T matrices.
MpcSpec parse_problem(const std::string& json_text);
MpcSpec load_problem(const std::filesystem::path& path);

/// Inverse of parse_problem, with time-varying costs written as lists.
std::string problem_to_json(const MpcSpec& spec);

HessianConvention parse_hessian_convention(const std::string& name);
std::string to_string(HessianConvention c);

/// The double integrator x+ = [[1,1],[0,1]] x + [0;1] u with Q = I,
/// R = 0.01, T = 10, ||x||_inf <= 10, |u| <= 1.
MpcSpec double_integrator_spec(int horizon = 10);

}  // namespace bmpc
