#pragma once

// Command-line front end: solve, sweep, estimate-inc, vopt, verify-props.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "svi/problem_io.hpp"

namespace svi {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitSolver = 2, kExitInternal = 3 };

/// Runs one command; diagnostics go to err, reports and CSV (without --out) to out.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Loads "builtin:<name>" or a JSON file.
ProblemFile resolve_problem(const std::string& spec);

/// Parses "a,b,c" into a vector.
Vector parse_vector(std::string_view text);

struct PropertyCount {
  std::string name;
  std::size_t passed = 0;
  std::size_t failed = 0;
};

/// Geometry and merit property suites evaluated on a loaded problem at sampled (p, x).
std::vector<PropertyCount> verify_properties(const ProblemFile& file,
                                             const std::vector<double>& p_values,
                                             std::size_t trials, std::uint64_t seed);

}  // namespace svi
