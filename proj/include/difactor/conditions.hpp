#pragma once

// Factorization conditions for second-order operators with two first-order
// factors, obtained by expanding symbolic factors and identifying
// coefficients, plus the candidate checker built on re-expansion.
//
// Symbol conventions: operator coefficients g[k,h] (scalar) and f[p,q,k,h]
// (matrix); factor coefficients b[i,k,h] and a[i,p,q,k,h] for factor i
// (i = 1 is the left factor).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "difactor/expr.hpp"
#include "difactor/operator.hpp"
#include "difactor/random.hpp"

namespace difactor {

struct TemplateId {
  bool nonlinear = false;
  bool matrix = false;
  bool pde = false;  // two independent variables

  int n() const { return pde ? 2 : 1; }
  Linearity linearity() const { return nonlinear ? Linearity::QuasiLinear : Linearity::Linear; }
  auto operator<=>(const TemplateId&) const = default;
};

/// "linear-ode", "nonlinear-pde2-system", ...
std::string to_string(const TemplateId& t);
std::optional<TemplateId> parse_template(std::string_view name);

struct Equation {
  Expr lhs;  // sum of operator symbols, or 0 for a pure condition on the factors
  Expr rhs;
};

struct ConditionSystem {
  TemplateId id;
  int n = 1;
  int m = 1;
  std::vector<Equation> equations;

  std::size_t zero_condition_count() const;
};

/// Generates the condition system. Throws UnsupportedTemplate when m does
/// not fit the template (scalar templates need m = 1).
ConditionSystem derive_conditions(const TemplateId& t, int m = 1);

std::string to_string(const Equation& e, const PrintOptions& opts = {});
std::string to_string(const ConditionSystem& s);

/// "lhs = rhs" per line; '#' starts a comment.
std::vector<Equation> parse_equations(std::string_view text, const ParseOptions& opts);

/// Pure conditions reduced to a canonical comparable set: common atom
/// factors stripped, leading coefficient 1, duplicates removed, and
/// conditions that vanish modulo single-atom conditions dropped.
std::vector<Expr> reduce_zero_conditions(const std::vector<Expr>& conds);

struct GoldenComparison {
  bool match = false;
  std::vector<std::string> missing;     // in the reference, not derived
  std::vector<std::string> unexpected;  // derived, not in the reference
};

/// Equations with a nonzero lhs must agree exactly (as a set); pure
/// conditions are compared exactly when reduce is false and after
/// reduce_zero_conditions otherwise.
GoldenComparison compare_equations(const std::vector<Equation>& derived,
                                   const std::vector<Equation>& reference, bool reduce);

struct Candidate {
  std::vector<DiffOperator> factors;          // scalar templates
  std::vector<MatrixOperator> matrix_factors;  // matrix templates

  bool is_matrix() const { return !matrix_factors.empty(); }
};

/// Symbol resolver for g/f (from the operator) and b/a (from the candidate).
SymbolResolver operator_resolver(const DiffOperator& p);
SymbolResolver operator_resolver(const MatrixOperator& p);
SymbolResolver candidate_resolver(const Candidate& c);

/// lhs - rhs of every equation with the symbols replaced.
std::vector<Expr> condition_residuals(const ConditionSystem& s, const SymbolResolver& resolve);

struct CheckOptions {
  int samples = 8;
  double tol = 1e-9;
  std::uint64_t seed = 1;
  bool numeric = true;
};

struct TermResidual {
  std::string label;     // "g[1,1]", "g[2,2] + g[2,3]", "0 (u_{(1,1)}^2)", "f[1,2,0,1]"
  std::string monomial;  // printed jet monomial
  Expr residual;         // operator coefficient minus product coefficient
};

struct CheckReport {
  bool pass = false;  // symbolic verdict
  std::size_t conditions = 0;
  std::size_t satisfied = 0;
  std::vector<TermResidual> residuals;  // every identified term, in a fixed order
  bool numeric_ran = false;
  double numeric_max_residual = 0.0;
  bool numeric_ok = true;
  std::string numeric_note;
};

/// Symbolic verdict: the operator's jet polynomial minus the expansion of the
/// candidate, term by term. Numeric layer (advisory): random polynomial test
/// functions of degree 4, sampled in [-1,1]^n. Throws ShapeMismatch.
CheckReport check_candidate(const DiffOperator& p, const Candidate& c, const CheckOptions& opts = {});
CheckReport check_candidate(const MatrixOperator& p, const Candidate& c, const CheckOptions& opts = {});

/// (g[2,2] + g[2,3])^2 - 4 g[2,1] g[2,4] for a two-variable operator.
Expr discriminant(const DiffOperator& p);

}  // namespace difactor
