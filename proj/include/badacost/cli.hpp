#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "badacost/cost_model.hpp"
#include "badacost/eval.hpp"

namespace badacost::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 1;
inline constexpr int kUsageError = 2;

/// Parses a --cost value for a K-class problem:
///   zero-one[:SCALE] | samme | detection:BETA | circular:ALPHA,BETA,GAMMA |
///   imbalance-auto | file:PATH
CostSource parse_cost_source(const std::string& text, int k);

/// Runs the command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace badacost::cli
