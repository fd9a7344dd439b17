#pragma once

// Differential operators sum_{k,h} c_{k,h} D_{k,h} and their compositions.
//
// Compositions are expanded on a generic dependent variable: every derivative
// of u is a jet variable, coefficients are expressions in (x, u) and opaque
// symbols, and a left factor acts on the expansion of the factors to its right
// by total derivatives (chain rule through the jet coordinates).

#include <map>
#include <string>
#include <vector>

#include "difactor/expr.hpp"
#include "difactor/jet.hpp"

namespace difactor {

enum class Linearity { Linear, QuasiLinear };

class DiffOperator {
 public:
  DiffOperator(int n = 1, int m = 1, Linearity lin = Linearity::Linear);

  int n() const { return n_; }
  int m() const { return m_; }
  Linearity linearity() const { return lin_; }

  /// Stores the simplified coefficient; zero coefficients are dropped.
  /// Throws InvalidIndex for a slot outside n, ValidationError when the
  /// coefficient violates the linearity class.
  void set(const DerivIndex& d, const Expr& c);
  void set(int k, std::uint64_t h, const Expr& c) { set(DerivIndex::make(n_, k, h), c); }
  Expr coeff(const DerivIndex& d) const;
  Expr coeff(int k, std::uint64_t h) const { return coeff(DerivIndex::make(n_, k, h)); }

  const std::map<DerivIndex, Expr>& coeffs() const { return coeffs_; }
  /// Highest order with a nonzero coefficient; -1 for the zero operator.
  int order() const;
  bool is_zero() const { return coeffs_.empty(); }

  friend bool operator==(const DiffOperator& a, const DiffOperator& b);

 private:
  int n_;
  int m_;
  Linearity lin_;
  std::map<DerivIndex, Expr> coeffs_;
};

/// m x m grid of scalar operators; entry (p,q) acts on component q.
class MatrixOperator {
 public:
  MatrixOperator(int n = 1, int m = 1, Linearity lin = Linearity::Linear);

  int n() const { return n_; }
  int m() const { return m_; }
  Linearity linearity() const { return lin_; }

  DiffOperator& at(int p, int q);  // 1-based
  const DiffOperator& at(int p, int q) const;

  /// Orders of the entries; -1 for zero entries.
  std::vector<std::vector<int>> order_profile() const;
  /// Diagonal entries of order <= 1 and off-diagonal entries of order <= 0.
  bool is_factor_shaped() const;

 private:
  int n_;
  int m_;
  Linearity lin_;
  std::vector<DiffOperator> cells_;
};

/// Jet variables of order >= 1 with positive exponents, sorted.
using JetMonomial = std::vector<std::pair<VarId, int>>;

/// Canonical expansion of an operator expression applied to component q of a
/// generic dependent variable. A term's monomial holds its jet variables of
/// order >= 1; a term without such variables holds a single factor u^q (its
/// key is {u^q}). Everything else lives in the coefficient.
class JetPolynomial {
 public:
  JetPolynomial(int n = 1, int m = 1, int q = 1) : n_(n), m_(m), q_(q) {}

  /// Collects a polynomial expression in the jet variables.
  static JetPolynomial from_expr(const Expr& e, int n, int m, int q);
  Expr to_expr() const;

  int n() const { return n_; }
  int m() const { return m_; }
  int target() const { return q_; }
  const std::map<JetMonomial, Expr>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  Expr coeff(const JetMonomial& mono) const;

  /// Every monomial is a single jet variable (or u^q) of component q.
  bool is_linear() const;

  friend bool operator==(const JetPolynomial& a, const JetPolynomial& b) {
    return a.n_ == b.n_ && a.q_ == b.q_ && a.terms_ == b.terms_;
  }
  friend JetPolynomial operator-(const JetPolynomial& a, const JetPolynomial& b);

 private:
  int n_;
  int m_;
  int q_;
  std::map<JetMonomial, Expr> terms_;
};

/// The monomial of a single jet variable (order 0 gives {u^j}).
JetMonomial jet_monomial(int j, const DerivIndex& d);

/// Schwarz-equal slots merged onto the smallest slot, like terms collected.
JetPolynomial canonicalize_jet(const JetPolynomial& p);

/// Maps every jet variable to its Schwarz-canonical slot.
Expr canonicalize_jet_vars(const Expr& e);

/// Total derivative along axis i with the chain rule through u^1..u^m and all
/// jet variables present.
Expr total_derivative(const Expr& e, Axis i, int n, int m);

/// sum c_{k,h} * D_{axes(k,h)} f, by total derivatives.
Expr apply_to_jet(const DiffOperator& op, const Expr& f);

/// The operator applied to component q of a generic dependent variable.
JetPolynomial to_jet(const DiffOperator& op, int q = 1);

/// Concrete application: coefficients evaluated at u_exprs, derivatives of
/// u_exprs[target-1] taken by partial differentiation in x. Throws
/// ArityMismatch when a referenced component is missing.
Expr apply(const DiffOperator& op, int target, const std::vector<Expr>& u_exprs);

/// Component-wise application of a matrix operator.
std::vector<Expr> apply(const MatrixOperator& op, const std::vector<Expr>& u_exprs);

/// Replaces u^j and its jet variables by u_exprs and their derivatives.
Expr instantiate(const Expr& jet_expr, const std::vector<Expr>& u_exprs, int n);

struct ExpandOptions {
  int order_cap = 6;
  int target = 1;
};

/// Product of the factors (leftmost applied last) on component target.
/// Throws OrderOverflow when the summed factor orders exceed the cap.
JetPolynomial expand_product(const std::vector<DiffOperator>& factors, const ExpandOptions& opts = {});

using JetGrid = std::vector<std::vector<JetPolynomial>>;  // [p-1][q-1]

/// Entry (p,q) of the product applied to a generic vector u. Throws
/// ShapeMismatch for inconsistent factor sizes.
JetGrid matrix_expand_product(const std::vector<MatrixOperator>& factors,
                              const ExpandOptions& opts = {});

/// Reads a linear jet polynomial back as an operator; nullopt if nonlinear.
std::optional<DiffOperator> to_operator(const JetPolynomial& p, Linearity lin);

std::string to_string(const JetMonomial& mono, const PrintOptions& opts = {});
std::string to_string(const JetPolynomial& p, const PrintOptions& opts = {});
std::string to_string(const DiffOperator& op, const PrintOptions& opts = {});

}  // namespace difactor
