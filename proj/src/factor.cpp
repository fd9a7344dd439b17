#include "difactor/factor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "difactor/errors.hpp"
#include "difactor/poly.hpp"

namespace difactor {

namespace {

const DerivIndex kD1 = DerivIndex::make(1, 1, 1);

DiffOperator first_order_ode(const Expr& lead, const Expr& zeroth) {
  DiffOperator q(1, 1, Linearity::Linear);
  q.set(kD1, lead);
  q.set(DerivIndex::identity(1), zeroth);
  return q;
}

DiffOperator first_order_pde(const Expr& c1, const Expr& c2, const Expr& zeroth) {
  DiffOperator q(2, 1, Linearity::Linear);
  q.set(1, 1, c1);
  q.set(1, 2, c2);
  q.set(0, 1, zeroth);
  return q;
}

void require_second_order(const DiffOperator& p, int n) {
  if (p.n() != n) throw UnsupportedTemplate("expected " + std::to_string(n) + " independent variable(s)");
  if (p.m() != 1) throw UnsupportedTemplate("scalar operator expected");
  if (p.linearity() != Linearity::Linear) throw UnsupportedTemplate("linear operator expected");
  if (p.order() != 2) throw UnsupportedTemplate("second-order operator expected");
}

std::optional<Rational> rational_sqrt(const Rational& q) {
  if (q < 0) return std::nullopt;
  const mpz_class& num = q.get_num();
  const mpz_class& den = q.get_den();
  if (!mpz_perfect_square_p(num.get_mpz_t()) || !mpz_perfect_square_p(den.get_mpz_t())) return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
  return Rational(rn, rd);
}

/// Rational roots of c2 y^2 + c1 y + c0 (c2 may be 0), each once.
std::vector<Rational> rational_roots(const Rational& c2, const Rational& c1, const Rational& c0) {
  if (c2 == 0) {
    if (c1 == 0) return {};
    return {Rational(-c0 / c1)};
  }
  const Rational disc = c1 * c1 - 4 * c2 * c0;
  const auto r = rational_sqrt(disc);
  if (!r) return {};
  Rational a = (-c1 + *r) / (2 * c2);
  Rational b = (-c1 - *r) / (2 * c2);
  if (a == b) return {a};
  return {a, b};
}

bool is_polynomial_in_x1(const Expr& e) {
  const SparsePoly p = SparsePoly::from_expr(e);
  for (const auto& [mono, c] : p.terms()) {
    for (const auto& [atom, k] : mono) {
      if (k < 0 || atom.kind() != NodeKind::Var || !(atom.var_id() == VarId::x(1))) return false;
    }
  }
  return true;
}

/// Coefficients of p by powers of an atom that occurs only as a bare factor.
/// The unknowns are coefficient symbols, which formally depend on x1, so
/// SparsePoly::coefficients_in would refuse them.
std::map<long, SparsePoly> powers_of(const SparsePoly& p, const Expr& atom) {
  std::map<long, SparsePoly> out;
  for (const auto& [mono, c] : p.terms()) {
    long k = 0;
    Monomial rest;
    for (const auto& [a, e] : mono) {
      if (a == atom) {
        k = e;
      } else {
        rest.emplace_back(a, e);
      }
    }
    out[k].add_term(rest, c);
  }
  return out;
}

Expr unknown(int i) { return Expr::symbol(Symbol{"y", {i}, false, {}}); }

/// Polynomial equations in the unknowns y[0..d], solved by repeatedly
/// eliminating an unknown from an equation in which it is the only one.
class AnsatzSolver {
 public:
  AnsatzSolver(int degree, int budget) : degree_(degree), budget_(budget) {}

  std::vector<std::map<int, Rational>> run(std::vector<SparsePoly> eqs) {
    solve(std::move(eqs), {});
    return out_;
  }

 private:
  static int unknown_of(const Expr& atom) { return atom.symbol_data().indices.at(0); }

  static SparsePoly assign(const SparsePoly& p, int i, const Rational& v) {
    const Expr e = substitute_symbols(p.to_expr(), [&](const Symbol& s) -> std::optional<Expr> {
      if (s.name == "y" && s.indices.size() == 1 && s.indices[0] == i) return Expr(v);
      return std::nullopt;
    });
    return SparsePoly::from_expr(e);
  }

  void solve(std::vector<SparsePoly> eqs, std::map<int, Rational> known) {
    if (--budget_ < 0) return;
    std::vector<SparsePoly> live;
    for (auto& e : eqs) {
      if (e.is_zero()) continue;
      if (e.constant_value()) return;  // nonzero constant: inconsistent branch
      live.push_back(std::move(e));
    }
    if (live.empty()) {
      // Unknowns never constrained are free; pick the simplest admissible value.
      for (int i = 0; i <= degree_; ++i) {
        if (!known.count(i)) known[i] = (i == degree_ && degree_ > 0) ? Rational(1) : Rational(0);
      }
      out_.push_back(std::move(known));
      return;
    }
    // Prefer the univariate equation of lowest degree.
    const SparsePoly* best = nullptr;
    int best_var = -1;
    long best_deg = 0;
    for (const auto& e : live) {
      std::set<int> vars;
      long deg = 0;
      for (const auto& [mono, c] : e.terms()) {
        for (const auto& [atom, k] : mono) {
          vars.insert(unknown_of(atom));
          deg = std::max(deg, k);
        }
      }
      if (vars.size() != 1 || deg > 2) continue;
      if (!best || deg < best_deg) {
        best = &e;
        best_var = *vars.begin();
        best_deg = deg;
      }
    }
    if (!best) return;  // no triangular structure left; outside what the search resolves
    const auto coeffs = powers_of(*best, unknown(best_var));
    auto at = [&](long k) {
      auto it = coeffs.find(k);
      if (it == coeffs.end()) return Rational(0);
      return *it->second.constant_value();
    };
    for (const Rational& root : rational_roots(at(2), at(1), at(0))) {
      if (best_var == degree_ && degree_ > 0 && root == 0) continue;  // found at a lower degree
      std::vector<SparsePoly> next;
      next.reserve(live.size());
      for (const auto& e : live) next.push_back(assign(e, best_var, root));
      auto k2 = known;
      k2[best_var] = root;
      solve(std::move(next), std::move(k2));
    }
  }

  int degree_;
  int budget_;
  std::vector<std::map<int, Rational>> out_;
};

Expr operator_L(const Expr& c1, const Expr& c2, const Expr& w) {
  return simplify(c1 * diff(w, VarId::x(1)) + c2 * diff(w, VarId::x(2)));
}

Candidate swap_candidate(const Candidate& c) {
  Candidate out;
  for (const auto& f : c.factors) out.factors.push_back(swap_axes(f));
  return out;
}

}  // namespace

Expr swap_axes(const Expr& e) {
  return substitute(e, {{VarId::x(1), Expr::x(2)}, {VarId::x(2), Expr::x(1)}});
}

DiffOperator swap_axes(const DiffOperator& op) {
  if (op.n() != 2) throw InvalidIndex("axis swap needs two independent variables");
  DiffOperator out(2, op.m(), op.linearity());
  for (const auto& [d, c] : op.coeffs()) {
    std::vector<Axis> axes = index_to_axes(d);
    for (Axis& a : axes) a = 3 - a;
    out.set(axes.empty() ? d : axes_to_index(2, axes), swap_axes(c));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Constant coefficients

std::vector<Candidate> factor_constant(const DiffOperator& p, const SearchConfig& cfg) {
  require_second_order(p, 1);
  for (const auto& [d, c] : p.coeffs()) {
    if (!as_constant(c)) throw NotConstant("coefficient " + to_string(d) + " is " + to_string(c));
  }
  const Rational g21 = *as_constant(p.coeff(2, 1));
  const Rational g11 = *as_constant(p.coeff(1, 1));
  const Rational g01 = *as_constant(p.coeff(0, 1));
  const Rational disc = g11 * g11 - 4 * g21 * g01;
  if (disc < 0) throw NoRealFactorization("discriminant " + to_string(disc) + " is negative");

  std::vector<Expr> roots;
  const Expr s = simplify(Expr::fun(FunKind::Sqrt, Expr(disc)));
  roots.push_back(simplify((Expr(g11) + s) / Expr(2 * g21)));
  if (disc != 0 && cfg.allow_swap) roots.push_back(simplify((Expr(g11) - s) / Expr(2 * g21)));

  std::vector<Candidate> out;
  for (const Expr& y : roots) {
    const Expr x = simplify(Expr(g11) - Expr(g21) * y);
    out.push_back(Candidate{{first_order_ode(Expr(g21), x), first_order_ode(1, y)}, {}});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Riccati route

RiccatiProblem RiccatiProblem::from_operator(const DiffOperator& p) {
  require_second_order(p, 1);
  const Expr g21 = p.coeff(2, 1);
  const Expr g11 = p.coeff(1, 1);
  const Expr g01 = p.coeff(0, 1);
  RiccatiProblem r;
  r.b111 = g21;
  r.b211 = Expr(1);
  r.g11 = g11;
  r.A = simplify(r.b111 / g21);
  r.B = simplify((g11 - r.b111 * diff(r.b211, VarId::x(1))) / g21);
  r.C = simplify(g01 / r.b111);
  return r;
}

Expr RiccatiProblem::residual(const Expr& y) const {
  return simplify(diff(y, VarId::x(1)) - A * y * y + B * y - C);
}

Candidate RiccatiProblem::candidate(const Expr& y) const {
  const Expr x = simplify((g11 - b111 * diff(b211, VarId::x(1)) - b111 * y) / b211);
  return Candidate{{first_order_ode(b111, x), first_order_ode(b211, y)}, {}};
}

std::vector<Expr> solve_riccati_ansatz(const RiccatiProblem& prob, const SearchConfig& cfg) {
  for (const Expr* c : {&prob.A, &prob.B, &prob.C}) {
    if (!is_polynomial_in_x1(*c)) throw NonPolynomialCoefficients(to_string(*c) + " is not a polynomial in x1");
  }
  const Expr x = Expr::x(1);
  std::vector<Expr> found;
  for (int d = 0; d <= cfg.ansatz_degree; ++d) {
    std::vector<Expr> y_terms, dy_terms;
    for (int i = 0; i <= d; ++i) {
      y_terms.push_back(unknown(i) * Expr::power(x, i));
      if (i > 0) dy_terms.push_back(Expr(i) * unknown(i) * Expr::power(x, i - 1));
    }
    const Expr y = Expr::sum(y_terms);
    const Expr r = simplify(Expr::sum(dy_terms) - prob.A * y * y + prob.B * y - prob.C);
    const auto by_power = powers_of(SparsePoly::from_expr(r), x);
    std::vector<SparsePoly> eqs;
    // Highest powers first: their equations are the first to become univariate.
    for (auto it = by_power.rbegin(); it != by_power.rend(); ++it) eqs.push_back(it->second);

    for (const auto& sol : AnsatzSolver(d, cfg.branch_limit).run(std::move(eqs))) {
      std::vector<Expr> terms;
      for (const auto& [i, v] : sol) terms.push_back(Expr(v) * Expr::power(x, i));
      const Expr cand = simplify(Expr::sum(terms));
      if (!is_zero(prob.residual(cand))) continue;
      if (std::find(found.begin(), found.end(), cand) == found.end()) found.push_back(cand);
    }
  }
  return found;
}

std::vector<Candidate> factor_riccati(const DiffOperator& p, const SearchConfig& cfg) {
  const RiccatiProblem prob = RiccatiProblem::from_operator(p);
  std::vector<Candidate> out;
  for (const Expr& y : solve_riccati_ansatz(prob, cfg)) out.push_back(prob.candidate(y));
  return out;
}

// ---------------------------------------------------------------------------
// Two independent variables

ObligationCheck check_obligation(const PdeObligation& ob, const Expr& z_in) {
  const Expr z = ob.swapped ? swap_axes(z_in) : simplify(z_in);
  const Expr y = simplify(ob.g11 - ob.g21 * z);
  ObligationCheck res;
  res.equation_residual = simplify(operator_L(ob.g21, ob.X1, z) - ob.g21 * z * z + ob.g11 * z - ob.g01);
  res.g12_residual = simplify(ob.g12 - (ob.X2 * y + ob.X1 * z + operator_L(ob.g21, ob.X1, ob.X2)));
  res.ok = is_zero(res.equation_residual) && is_zero(res.g12_residual);
  Candidate c{{first_order_pde(ob.g21, ob.X1, y), first_order_pde(1, ob.X2, z)}, {}};
  res.candidate = ob.swapped ? swap_candidate(c) : c;
  if (ob.swapped) {
    res.equation_residual = swap_axes(res.equation_residual);
    res.g12_residual = swap_axes(res.g12_residual);
  }
  return res;
}

PdeFactorResult factor_pde_second_order(const DiffOperator& p_in, const SearchConfig& cfg) {
  require_second_order(p_in, 2);
  PdeFactorResult result;
  result.delta = discriminant(p_in);

  DiffOperator p = p_in;
  if (is_zero(p.coeff(2, 1))) {
    if (is_zero(p.coeff(2, 4))) {
      throw UnsupportedTemplate("principal part is purely mixed; no gauge with b[1,1,1] b[2,1,1] != 0");
    }
    p = swap_axes(p_in);
    result.swapped = true;
  }
  const Expr g21 = p.coeff(2, 1);
  const Expr s = simplify(p.coeff(2, 2) + p.coeff(2, 3));
  const Expr g11 = p.coeff(1, 1);
  const Expr g12 = p.coeff(1, 2);
  const Expr g01 = p.coeff(0, 1);
  const Expr delta = result.swapped ? discriminant(p) : result.delta;

  // Square root of the discriminant, or nullopt when it vanishes.
  std::optional<Expr> root;
  const SparsePoly dp = SparsePoly::from_expr(delta);
  if (auto c = dp.constant_value()) {
    if (*c < 0) throw NoRealFactorization("discriminant " + to_string(*c) + " is negative");
    if (*c > 0) root = simplify(Expr::fun(FunKind::Sqrt, Expr(*c)));
  } else if (auto r = poly_sqrt(dp)) {
    root = r->to_expr();
  } else {
    Rng rng(cfg.seed);
    bool all_negative = true;
    for (int i = 0; i < 16 && all_negative; ++i) {
      Bindings b{{VarId::x(1), uniform(rng, -1, 1)}, {VarId::x(2), uniform(rng, -1, 1)}};
      try {
        all_negative = eval(delta, b) < 0;
      } catch (const Error&) {
        all_negative = false;
      }
    }
    if (all_negative) throw NoRealFactorization("discriminant " + to_string(delta) + " is negative");
    throw NonPolynomialSqrtDelta("discriminant " + to_string(delta) + " is not a perfect square");
  }

  if (!root) {
    PdeObligation ob;
    ob.g21 = g21;
    ob.g11 = g11;
    ob.g12 = g12;
    ob.g01 = g01;
    ob.X2 = simplify(s / (Expr(2) * g21));
    ob.X1 = simplify(s - g21 * ob.X2);
    ob.swapped = result.swapped;
    const Expr z = Expr::symbol(Symbol{"Z", {}, false, {}});
    // Built in the caller's coordinates so that printed derivatives of Z match.
    const Expr c1 = result.swapped ? swap_axes(ob.X1) : g21;
    const Expr c2 = result.swapped ? swap_axes(g21) : ob.X1;
    const Expr lead = result.swapped ? swap_axes(g21) : g21;
    const Expr lin = result.swapped ? swap_axes(g11) : g11;
    const Expr src = result.swapped ? swap_axes(g01) : g01;
    ob.equation = simplify(operator_L(c1, c2, z) - lead * z * z + lin * z - src);
    result.obligation = ob;
    return result;
  }

  for (int sign : {1, -1}) {
    const Expr x2 = simplify((s + Expr(sign) * *root) / (Expr(2) * g21));
    const Expr x1 = simplify(s - g21 * x2);
    const Expr det = simplify(x1 - g21 * x2);
    const Expr e1 = g11;
    const Expr e2 = simplify(g12 - operator_L(g21, x1, x2));
    const Expr y = simplify((e1 * x1 - g21 * e2) / det);
    const Expr z = simplify((e2 - x2 * e1) / det);
    PdeBranch br;
    br.g01_residual = simplify(g01 - (y * z + operator_L(g21, x1, z)));
    br.success = is_zero(br.g01_residual);
    Candidate c{{first_order_pde(g21, x1, y), first_order_pde(1, x2, z)}, {}};
    if (result.swapped) {
      c = swap_candidate(c);
      br.g01_residual = swap_axes(br.g01_residual);
    }
    br.candidate = std::move(c);
    result.branches.push_back(std::move(br));
  }
  return result;
}

}  // namespace difactor
