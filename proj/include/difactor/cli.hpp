#pragma once

// Command dispatch for the difactor tool. Exit codes: 0 PASS, 1 FAIL or a
// named mathematical failure (NoRealFactorization, ...), 2 parse or
// validation error, 3 capacity error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "difactor/problem.hpp"

namespace difactor {

struct RunOptions {
  bool json = false;
  std::uint64_t seed = 1;
  int samples = 8;
  double tol = 1e-9;
  int ansatz_degree = 3;
  std::optional<std::pair<double, double>> interval;
  std::optional<int> steps;
  std::optional<std::string> csv_dir;  // cascade trajectories, one file per solution column
};

enum ExitCode { kExitPass = 0, kExitFail = 1, kExitInput = 2, kExitCapacity = 3 };

/// Relative residual accepted for numerically constructed cascade solutions.
inline constexpr double kNumericResidualTol = 1e-5;

/// Runs one of expand, conditions, check, factor, cascade and writes the
/// report to out.
int run(const std::string& command, const ProblemFile& problem, const RunOptions& opts, std::ostream& out);

/// Full command line: difactor <command> <problem-file> [flags].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace difactor
