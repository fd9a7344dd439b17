#pragma once

// Factorization searches for second-order scalar operators: constant
// coefficients, polynomial solutions of the Riccati equation for ODEs, and the
// principal-symbol route for operators in two variables.
//
// Every search fixes the gauge b[2,1,1] = 1, b[1,1,1] = g[2,1].

#include <cstdint>
#include <optional>
#include <vector>

#include "difactor/conditions.hpp"

namespace difactor {

struct SearchConfig {
  int ansatz_degree = 3;
  bool allow_swap = true;  // return both factor orders where they differ
  std::uint64_t seed = 1;
  int branch_limit = 4096;
};

/// Candidates (b101, b201) from the roots of g21 Y^2 - g11 Y + g01 = 0.
/// Throws NotConstant, NoRealFactorization, UnsupportedTemplate.
std::vector<Candidate> factor_constant(const DiffOperator& p, const SearchConfig& cfg = {});

/// D(Y) - A Y^2 + B Y - C = 0 together with its gauge.
struct RiccatiProblem {
  Expr A;
  Expr B;
  Expr C;
  Expr b111;
  Expr b211;
  Expr g11;

  /// The equation of an ODE operator in the fixed gauge. Throws
  /// UnsupportedTemplate when the operator is not a second-order ODE or
  /// g[2,1] is zero.
  static RiccatiProblem from_operator(const DiffOperator& p);

  Expr residual(const Expr& y) const;
  /// (b111 D + X)(b211 D + Y) with X recovered from the g[1,1] condition.
  Candidate candidate(const Expr& y) const;
};

/// All polynomial Y of degree <= cfg.ansatz_degree with exactly rational
/// coefficients solving the equation. Empty when the ansatz has no solution.
/// Throws NonPolynomialCoefficients.
std::vector<Expr> solve_riccati_ansatz(const RiccatiProblem& prob, const SearchConfig& cfg = {});

/// Riccati route for a second-order ODE operator; the candidates of every
/// ansatz solution.
std::vector<Candidate> factor_riccati(const DiffOperator& p, const SearchConfig& cfg = {});

struct PdeBranch {
  Candidate candidate;
  Expr g01_residual;  // the remaining condition; the split is valid iff it is 0
  bool success = false;
};

/// The first-order quasi-linear equation left when the discriminant vanishes.
struct PdeObligation {
  Expr g21;
  Expr g11;
  Expr g12;
  Expr g01;
  Expr X1;  // b[1,1,2]
  Expr X2;  // b[2,1,2]
  Expr equation;  // in the unknown symbol Z, equal to 0
  bool swapped = false;
};

struct ObligationCheck {
  Expr equation_residual;
  Expr g12_residual;
  bool ok = false;
  Candidate candidate;
};

ObligationCheck check_obligation(const PdeObligation& ob, const Expr& z);

struct PdeFactorResult {
  Expr delta;
  bool swapped = false;  // solved with x1 and x2 exchanged, results mapped back
  std::vector<PdeBranch> branches;       // discriminant positive
  std::optional<PdeObligation> obligation;  // discriminant zero
};

/// Throws NoRealFactorization, NonPolynomialSqrtDelta, UnsupportedTemplate.
PdeFactorResult factor_pde_second_order(const DiffOperator& p, const SearchConfig& cfg = {});

/// Exchanges x1 and x2 in an expression or a two-variable operator.
Expr swap_axes(const Expr& e);
DiffOperator swap_axes(const DiffOperator& op);

}  // namespace difactor
