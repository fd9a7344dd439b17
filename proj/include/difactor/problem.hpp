#pragma once

// Problem files: INI-style sections with quoted expression values.
//
//   [problem]
//   kind = linear-ode
//   [operator]
//   g[2,1] = "1"
//   g[1,1] = "-3"
//   [Q1]
//   b[1,1] = "1"
//   [solve]
//   interval = "0,1"
//
// Scalar kinds use g[k,h] and factor sections Q1/Q2 with b[k,h]; system
// kinds use f[p,q,k,h] and N1/N2 with a[p,q,k,h].

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "difactor/conditions.hpp"

namespace difactor {

struct SolveSettings {
  std::optional<std::pair<double, double>> interval;
  std::optional<int> steps;
  std::optional<Rational> C;

  bool operator==(const SolveSettings&) const = default;
};

struct ProblemFile {
  TemplateId kind;
  int n = 1;
  int m = 1;
  std::optional<DiffOperator> scalar;    // scalar kinds
  std::optional<MatrixOperator> matrix;  // system kinds
  std::optional<Candidate> candidate;
  SolveSettings solve;
};

bool operator==(const ProblemFile& a, const ProblemFile& b);

/// Throws ParseError with the file line and column, ValidationError for keys
/// or values the kind does not allow.
ProblemFile parse_problem(std::string_view text);

/// Canonical text; parse_problem(print_problem(p)) == p.
std::string print_problem(const ProblemFile& p);

}  // namespace difactor
