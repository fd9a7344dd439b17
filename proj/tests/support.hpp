#pragma once

// Random planted factorizations shared by the unit suites and the acceptance
// runner. Everything is seeded, so failures reproduce.

#include <optional>
#include <string>
#include <vector>

#include "difactor/conditions.hpp"
#include "difactor/operator.hpp"
#include "difactor/random.hpp"

namespace difactor::testing {

/// Small rational in {-3, ..., 3} / {1, 2}.
inline Rational small_rational(Rng& rng) {
  const long num = static_cast<long>(rng() % 7) - 3;
  const long den = 1 + static_cast<long>(rng() % 2);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

inline Rational nonzero_rational(Rng& rng) {
  for (;;) {
    Rational r = small_rational(rng);
    if (r != 0) return r;
  }
}

/// Polynomial of total degree <= degree in vars; each monomial is present
/// with probability 1/2 so the coefficient shapes vary.
inline Expr random_poly(Rng& rng, const std::vector<Expr>& vars, int degree) {
  std::vector<Expr> terms;
  std::vector<int> exps(vars.size(), 0);
  auto walk = [&](auto&& self, std::size_t axis, int left) -> void {
    if (axis == vars.size()) {
      if (rng() % 2 == 0) return;
      std::vector<Expr> fs{Expr(small_rational(rng))};
      for (std::size_t i = 0; i < vars.size(); ++i) fs.push_back(Expr::power(vars[i], exps[i]));
      terms.push_back(Expr::product(std::move(fs)));
      return;
    }
    for (int e = 0; e <= left; ++e) {
      exps[axis] = e;
      self(self, axis + 1, left - e);
    }
    exps[axis] = 0;
  };
  walk(walk, 0, degree);
  return simplify(Expr::sum(std::move(terms)));
}

/// Nonzero polynomial: a random one plus a nonzero constant.
inline Expr random_nonzero_poly(Rng& rng, const std::vector<Expr>& vars, int degree) {
  return simplify(random_poly(rng, vars, degree) + Expr(nonzero_rational(rng)));
}

inline std::vector<Expr> xs(int n) {
  std::vector<Expr> v;
  for (int i = 1; i <= n; ++i) v.push_back(Expr::x(i));
  return v;
}

/// Random first-order factor. with_u lets coefficients depend on u; the
/// leading coefficients never do when lead_free_of_u is set.
inline DiffOperator random_first_order(Rng& rng, int n, Linearity lin, int degree, bool lead_free_of_u) {
  DiffOperator q(n, 1, lin);
  std::vector<Expr> all = xs(n);
  if (lin == Linearity::QuasiLinear) all.push_back(Expr::u(1));
  const std::vector<Expr> lead_vars = lead_free_of_u ? xs(n) : all;
  q.set(1, 1, random_nonzero_poly(rng, lead_vars, degree));
  for (int h = 2; h <= n; ++h) q.set(1, static_cast<std::uint64_t>(h), random_poly(rng, lead_vars, degree));
  q.set(0, 1, random_poly(rng, all, degree));
  return q;
}

/// Planted scalar factorization for a template: the right factor's leading
/// coefficients are free of u, so the expansion is an operator (no products
/// of first derivatives).
inline Candidate random_scalar_candidate(Rng& rng, const TemplateId& t, int degree) {
  const Linearity lin = t.linearity();
  Candidate c;
  c.factors.push_back(random_first_order(rng, t.n(), lin, degree, false));
  c.factors.push_back(random_first_order(rng, t.n(), lin, degree, true));
  return c;
}

/// The operator whose expansion the candidate reproduces.
inline DiffOperator planted_operator(const Candidate& c, Linearity lin) {
  auto op = to_operator(expand_product(c.factors), lin);
  if (!op) throw std::runtime_error("planted expansion is not an operator");
  return *op;
}

/// First-order linear factor from constant coefficients c1 D + c0.
inline DiffOperator ode_factor(const Expr& c1, const Expr& c0, Linearity lin = Linearity::Linear) {
  DiffOperator q(1, 1, lin);
  q.set(1, 1, c1);
  q.set(0, 1, c0);
  return q;
}

inline DiffOperator ode_operator(const Expr& g2, const Expr& g1, const Expr& g0) {
  DiffOperator p(1, 1);
  p.set(2, 1, g2);
  p.set(1, 1, g1);
  p.set(0, 1, g0);
  return p;
}

/// Resolves operator symbols first, then candidate symbols.
inline SymbolResolver joint_resolver(SymbolResolver a, SymbolResolver b) {
  return [a, b](const Symbol& s) -> std::optional<Expr> {
    if (auto r = a(s)) return r;
    return b(s);
  };
}

inline bool all_zero(const std::vector<Expr>& es) {
  for (const auto& e : es)
    if (!is_zero(e)) return false;
  return true;
}

}  // namespace difactor::testing
