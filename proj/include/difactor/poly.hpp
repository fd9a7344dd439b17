#pragma once

// Sparse distributed polynomials over expression atoms. This is the normal
// form behind simplify(): atoms are variables, coefficient symbols,
// elementary-function applications and (for negative powers only) canonical
// sums that could not be cancelled.

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "difactor/expr.hpp"

namespace difactor {

/// Atom/exponent pairs sorted by atom; exponents are nonzero.
using Monomial = std::vector<std::pair<Expr, long>>;

/// Graded order: higher total degree first, then lexicographic on atoms.
struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

class SparsePoly {
 public:
  using Terms = std::map<Monomial, Rational, MonomialLess>;

  SparsePoly() = default;
  explicit SparsePoly(const Rational& c);
  static SparsePoly atom(const Expr& a, long exponent = 1);

  /// Normal form of an arbitrary expression.
  static SparsePoly from_expr(const Expr& e);
  Expr to_expr() const;

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::optional<Rational> constant_value() const;

  SparsePoly operator+(const SparsePoly& o) const;
  SparsePoly operator-(const SparsePoly& o) const;
  SparsePoly operator*(const SparsePoly& o) const;
  SparsePoly operator*(const Rational& c) const;
  SparsePoly pow(unsigned long k) const;
  SparsePoly negated() const { return *this * Rational(-1); }

  void add_term(const Monomial& m, const Rational& c);

  /// Exact division; nullopt if other does not divide this.
  std::optional<SparsePoly> divide_exact(const SparsePoly& other) const;

  /// Coefficients with respect to powers of a single atom (nonnegative
  /// exponents only). nullopt if the atom occurs with a negative exponent or
  /// inside another atom.
  std::optional<std::map<long, SparsePoly>> coefficients_in(const Expr& atom) const;

 private:
  Terms terms_;
};

/// Canonical expression of p, with rational kernels cancelled where possible.
Expr canonical_expr(const SparsePoly& p);

/// Exact square root of a polynomial, if it is a perfect square over the
/// rationals. The returned root has a positive leading coefficient.
std::optional<SparsePoly> poly_sqrt(const SparsePoly& p);

}  // namespace difactor
