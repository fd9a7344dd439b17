#include "difactor/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "difactor/errors.hpp"
#include "difactor/poly.hpp"

namespace difactor {

namespace {

Expr sym(const std::string& name, std::vector<int> idx, bool on_u) {
  return Expr::symbol(Symbol{name, std::move(idx), on_u, {}});
}

int to_int(std::uint64_t h) { return static_cast<int>(h); }

/// Schwarz classes of order k: representatives (smallest slot) with members.
std::vector<std::pair<DerivIndex, std::vector<DerivIndex>>> classes_of_order(int n, int k) {
  std::vector<std::pair<DerivIndex, std::vector<DerivIndex>>> out;
  for (const auto& d : indices_of_order(n, k)) {
    const DerivIndex c = canonical_slot(d);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == c; });
    if (it == out.end()) {
      out.push_back({c, {d}});
    } else {
      it->second.push_back(d);
    }
  }
  return out;
}

struct Labeler {
  bool matrix;
  bool on_u;
  int n;

  Expr lhs(int p, int q, const std::vector<DerivIndex>& members) const {
    std::vector<Expr> terms;
    for (const auto& d : members) {
      if (matrix) {
        terms.push_back(sym("f", {p, q, d.order, to_int(d.slot)}, on_u));
      } else {
        terms.push_back(sym("g", {d.order, to_int(d.slot)}, on_u));
      }
    }
    return simplify(Expr::sum(std::move(terms)));
  }
};

/// The monomial standing for slot d applied to component q.
JetMonomial slot_monomial(int q, const DerivIndex& d) {
  if (d.order == 0) return {{VarId::u(q), 1}};
  return jet_monomial(q, d);
}

struct Identified {
  Expr lhs;  // 0 for pure conditions
  JetMonomial mono;
};

/// Identification order for entry (p,q): template classes by descending
/// order, then the remaining monomials of the given polynomials.
std::vector<Identified> identify(const Labeler& lab, int p, int q, int max_order,
                                 const std::vector<const JetPolynomial*>& polys) {
  std::vector<Identified> out;
  std::set<JetMonomial> seen;
  for (int k = max_order; k >= 0; --k) {
    for (const auto& [rep, members] : classes_of_order(lab.n, k)) {
      JetMonomial mono = slot_monomial(q, rep);
      seen.insert(mono);
      out.push_back({lab.lhs(p, q, members), std::move(mono)});
    }
  }
  for (const auto* poly : polys) {
    for (const auto& [mono, c] : poly->terms()) {
      if (seen.insert(mono).second) out.push_back({Expr(0), mono});
    }
  }
  return out;
}

int entry_order(bool matrix, int p, int q, int total) { return matrix && p != q ? total - 1 : total; }

}  // namespace

std::string to_string(const TemplateId& t) {
  std::string s = t.nonlinear ? "nonlinear-" : "linear-";
  s += t.pde ? "pde2" : "ode";
  if (t.matrix) s += "-system";
  return s;
}

std::optional<TemplateId> parse_template(std::string_view name) {
  for (int bits = 0; bits < 8; ++bits) {
    TemplateId t{(bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
    if (to_string(t) == name) return t;
  }
  return std::nullopt;
}

std::size_t ConditionSystem::zero_condition_count() const {
  return static_cast<std::size_t>(std::count_if(
      equations.begin(), equations.end(), [](const Equation& e) { return e.lhs.is_zero_literal(); }));
}

ConditionSystem derive_conditions(const TemplateId& t, int m) {
  if (m < 1) throw UnsupportedTemplate("m must be positive");
  if (!t.matrix && m != 1) throw UnsupportedTemplate(to_string(t) + " needs m = 1");
  ConditionSystem sys{t, t.n(), m, {}};
  const int n = t.n();
  const Labeler lab{t.matrix, t.nonlinear, n};
  if (!t.matrix) {
    std::vector<DiffOperator> factors;
    for (int i = 1; i <= 2; ++i) {
      DiffOperator q(n, 1, t.linearity());
      q.set(0, 1, sym("b", {i, 0, 1}, t.nonlinear));
      for (int h = 1; h <= n; ++h) q.set(1, static_cast<std::uint64_t>(h), sym("b", {i, 1, h}, t.nonlinear));
      factors.push_back(std::move(q));
    }
    const JetPolynomial e = expand_product(factors);
    for (const auto& id : identify(lab, 1, 1, 2, {&e})) sys.equations.push_back({id.lhs, e.coeff(id.mono)});
    return sys;
  }
  std::vector<MatrixOperator> factors;
  for (int i = 1; i <= 2; ++i) {
    MatrixOperator f(n, m, t.linearity());
    for (int p = 1; p <= m; ++p) {
      for (int q = 1; q <= m; ++q) {
        f.at(p, q).set(0, 1, sym("a", {i, p, q, 0, 1}, t.nonlinear));
        if (p != q) continue;
        for (int h = 1; h <= n; ++h) {
          f.at(p, q).set(1, static_cast<std::uint64_t>(h), sym("a", {i, p, q, 1, h}, t.nonlinear));
        }
      }
    }
    factors.push_back(std::move(f));
  }
  const JetGrid grid = matrix_expand_product(factors);
  for (int p = 1; p <= m; ++p) {
    for (int q = 1; q <= m; ++q) {
      const JetPolynomial& e = grid[p - 1][q - 1];
      for (const auto& id : identify(lab, p, q, entry_order(true, p, q, 2), {&e})) {
        sys.equations.push_back({id.lhs, e.coeff(id.mono)});
      }
    }
  }
  return sys;
}

std::string to_string(const Equation& e, const PrintOptions& opts) {
  return to_string(e.lhs, opts) + " = " + to_string(e.rhs, opts);
}

std::string to_string(const ConditionSystem& s) {
  std::string out;
  for (const auto& e : s.equations) out += to_string(e, PrintOptions{s.m}) + "\n";
  return out;
}

std::vector<Equation> parse_equations(std::string_view text, const ParseOptions& opts) {
  std::vector<Equation> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, 1, "expected 'lhs = rhs'");
      auto parse_part = [&](std::string_view part, std::size_t offset) {
        try {
          return parse_expr(part, opts);
        } catch (const ParseError& err) {
          throw ParseError(line_no, offset + err.column(), err.message());
        }
      };
      out.push_back({parse_part(line.substr(0, eq), 0), parse_part(line.substr(eq + 1), eq + 1)});
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

std::vector<Expr> reduce_zero_conditions(const std::vector<Expr>& conds) {
  auto strippable = [](const Expr& a) {
    return (a.kind() == NodeKind::Sym && a.symbol_data().derivs.empty()) || a.kind() == NodeKind::Var;
  };
  std::vector<SparsePoly> polys;
  for (const auto& c : conds) {
    SparsePoly p = SparsePoly::from_expr(simplify(c));
    if (p.is_zero()) continue;
    std::map<Expr, long, ExprLess> common;
    bool first = true;
    for (const auto& [mono, coef] : p.terms()) {
      std::map<Expr, long, ExprLess> here;
      for (const auto& [a, k] : mono) {
        if (strippable(a) && k > 0) here.emplace(a, k);
      }
      if (first) {
        common = std::move(here);
        first = false;
        continue;
      }
      for (auto it = common.begin(); it != common.end();) {
        auto h = here.find(it->first);
        if (h == here.end()) {
          it = common.erase(it);
        } else {
          it->second = std::min(it->second, h->second);
          ++it;
        }
      }
    }
    for (const auto& [a, k] : common) p = p * SparsePoly::atom(a, -k);
    const Rational lead = p.terms().begin()->second;
    polys.push_back(p * Rational(1 / lead));
  }
  std::set<Expr, ExprLess> atomic;
  for (const auto& p : polys) {
    if (p.terms().size() == 1) {
      const auto& mono = p.terms().begin()->first;
      if (mono.size() == 1 && mono[0].second == 1) atomic.insert(mono[0].first);
    }
  }
  std::set<Expr, ExprLess> out;
  for (const auto& p : polys) {
    SparsePoly rest;
    for (const auto& [mono, coef] : p.terms()) {
      const bool killed = std::any_of(mono.begin(), mono.end(), [&](const auto& ak) {
        return ak.second > 0 && atomic.count(ak.first) > 0;
      });
      if (!killed) rest.add_term(mono, coef);
    }
    const bool is_atomic = p.terms().size() == 1 && p.terms().begin()->first.size() == 1 &&
                           atomic.count(p.terms().begin()->first[0].first) > 0;
    if (is_atomic || !rest.is_zero()) out.insert(p.to_expr());
  }
  return {out.begin(), out.end()};
}

GoldenComparison compare_equations(const std::vector<Equation>& derived,
                                   const std::vector<Equation>& reference, bool reduce) {
  GoldenComparison cmp;
  auto key = [](const Equation& e) { return to_string(e); };
  std::multiset<std::string> d_eq;
  std::multiset<std::string> r_eq;
  std::vector<Expr> d_zero;
  std::vector<Expr> r_zero;
  for (const auto& e : derived) {
    if (e.lhs.is_zero_literal()) {
      d_zero.push_back(e.rhs);
    } else {
      d_eq.insert(key(Equation{simplify(e.lhs), simplify(e.rhs)}));
    }
  }
  for (const auto& e : reference) {
    if (e.lhs.is_zero_literal()) {
      r_zero.push_back(e.rhs);
    } else {
      r_eq.insert(key(Equation{simplify(e.lhs), simplify(e.rhs)}));
    }
  }
  if (reduce) {
    d_zero = reduce_zero_conditions(d_zero);
    r_zero = reduce_zero_conditions(r_zero);
  }
  for (const auto& z : d_zero) d_eq.insert("0 = " + to_string(simplify(z)));
  for (const auto& z : r_zero) r_eq.insert("0 = " + to_string(simplify(z)));
  std::set_difference(r_eq.begin(), r_eq.end(), d_eq.begin(), d_eq.end(), std::back_inserter(cmp.missing));
  std::set_difference(d_eq.begin(), d_eq.end(), r_eq.begin(), r_eq.end(), std::back_inserter(cmp.unexpected));
  cmp.match = cmp.missing.empty() && cmp.unexpected.empty();
  return cmp;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<DerivIndex> index_from(int n, int k, int h) {
  if (k < 0 || h < 1) return std::nullopt;
  try {
    return DerivIndex::make(n, k, static_cast<std::uint64_t>(h));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

SymbolResolver operator_resolver(const DiffOperator& p) {
  return [p](const Symbol& s) -> std::optional<Expr> {
    if (s.name != "g" || s.indices.size() != 2) return std::nullopt;
    auto d = index_from(p.n(), s.indices[0], s.indices[1]);
    return d ? p.coeff(*d) : Expr(0);
  };
}

SymbolResolver operator_resolver(const MatrixOperator& p) {
  return [p](const Symbol& s) -> std::optional<Expr> {
    if (s.name != "f" || s.indices.size() != 4) return std::nullopt;
    const int r = s.indices[0];
    const int c = s.indices[1];
    if (r < 1 || c < 1 || r > p.m() || c > p.m()) return Expr(0);
    auto d = index_from(p.n(), s.indices[2], s.indices[3]);
    return d ? p.at(r, c).coeff(*d) : Expr(0);
  };
}

SymbolResolver candidate_resolver(const Candidate& cand) {
  return [cand](const Symbol& s) -> std::optional<Expr> {
    if (s.name == "b" && s.indices.size() == 3) {
      const int i = s.indices[0];
      if (i < 1 || static_cast<std::size_t>(i) > cand.factors.size()) return Expr(0);
      const auto& f = cand.factors[static_cast<std::size_t>(i - 1)];
      auto d = index_from(f.n(), s.indices[1], s.indices[2]);
      return d ? f.coeff(*d) : Expr(0);
    }
    if (s.name == "a" && s.indices.size() == 5) {
      const int i = s.indices[0];
      if (i < 1 || static_cast<std::size_t>(i) > cand.matrix_factors.size()) return Expr(0);
      const auto& f = cand.matrix_factors[static_cast<std::size_t>(i - 1)];
      const int r = s.indices[1];
      const int c = s.indices[2];
      if (r < 1 || c < 1 || r > f.m() || c > f.m()) return Expr(0);
      auto d = index_from(f.n(), s.indices[3], s.indices[4]);
      return d ? f.at(r, c).coeff(*d) : Expr(0);
    }
    return std::nullopt;
  };
}

std::vector<Expr> condition_residuals(const ConditionSystem& s, const SymbolResolver& resolve) {
  std::vector<Expr> out;
  for (const auto& e : s.equations) out.push_back(substitute_symbols(e.lhs - e.rhs, resolve));
  return out;
}

Expr discriminant(const DiffOperator& p) {
  if (p.n() != 2) throw InvalidIndex("discriminant needs two independent variables");
  const Expr s = p.coeff(2, 2) + p.coeff(2, 3);
  return simplify(s * s - Expr(4) * p.coeff(2, 1) * p.coeff(2, 4));
}

// ---------------------------------------------------------------------------
// Candidate checking

namespace {

/// sum c(x, u_exprs) * d^alpha f, by partial differentiation in x.
Expr apply_with(const DiffOperator& op, const std::map<VarId, Expr>& u_repl, const Expr& f) {
  std::vector<Expr> terms;
  for (const auto& [d, c] : op.coeffs()) {
    Expr cur = f;
    for (Axis a : index_to_axes(d)) cur = diff(cur, VarId::x(a));
    terms.push_back(substitute(c, u_repl) * cur);
  }
  return simplify(Expr::sum(std::move(terms)));
}

std::map<VarId, Expr> u_bindings(const std::vector<Expr>& u) {
  std::map<VarId, Expr> repl;
  for (std::size_t j = 0; j < u.size(); ++j) repl.emplace(VarId::u(static_cast<int>(j) + 1), u[j]);
  return repl;
}

bool has_symbols(const DiffOperator& op) {
  return std::any_of(op.coeffs().begin(), op.coeffs().end(),
                     [](const auto& dc) { return contains_symbols(dc.second); });
}

bool has_symbols(const MatrixOperator& op) {
  for (int p = 1; p <= op.m(); ++p) {
    for (int q = 1; q <= op.m(); ++q) {
      if (has_symbols(op.at(p, q))) return true;
    }
  }
  return false;
}

/// Max relative residual of lhs vs rhs over random points of [-1,1]^n.
void numeric_compare(CheckReport& rep, const std::vector<Expr>& lhs, const std::vector<Expr>& rhs, int n,
                     Rng& rng, const CheckOptions& opts) {
  for (int s = 0; s < opts.samples; ++s) {
    Bindings b;
    for (int i = 1; i <= n; ++i) b[VarId::x(i)] = uniform(rng, -1.0, 1.0);
    for (std::size_t c = 0; c < lhs.size(); ++c) {
      try {
        const double a = eval(lhs[c], b);
        const double v = eval(rhs[c], b);
        const double r = std::fabs(a - v) / std::max({1.0, std::fabs(a), std::fabs(v)});
        rep.numeric_max_residual = std::max(rep.numeric_max_residual, r);
        rep.numeric_ran = true;
      } catch (const DomainError&) {
      }
    }
  }
}

void finish(CheckReport& rep, const CheckOptions& opts) {
  rep.satisfied = static_cast<std::size_t>(std::count_if(
      rep.residuals.begin(), rep.residuals.end(), [](const TermResidual& t) { return t.residual.is_zero_literal(); }));
  rep.conditions = rep.residuals.size();
  rep.pass = rep.satisfied == rep.conditions;
  rep.numeric_ok = !rep.numeric_ran || rep.numeric_max_residual <= opts.tol;
}

void collect(CheckReport& rep, const Labeler& lab, int p, int q, int max_order, const JetPolynomial& target,
             const JetPolynomial& product, const PrintOptions& po) {
  const JetPolynomial diff = target - product;
  for (const auto& id : identify(lab, p, q, max_order, {&target, &product})) {
    std::string label = id.lhs.is_zero_literal() ? "0" : to_string(id.lhs, po);
    rep.residuals.push_back({std::move(label), to_string(id.mono, po), diff.coeff(id.mono)});
  }
}

}  // namespace

CheckReport check_candidate(const DiffOperator& p, const Candidate& c, const CheckOptions& opts) {
  if (c.is_matrix() || c.factors.empty()) throw ShapeMismatch("scalar operator needs scalar factors");
  for (const auto& f : c.factors) {
    if (f.n() != p.n() || f.m() != p.m()) throw ShapeMismatch("factor dimensions differ from the operator");
  }
  CheckReport rep;
  int total = 0;
  for (const auto& f : c.factors) total += std::max(0, f.order());
  const int max_order = std::max(p.order(), total);
  ExpandOptions eo;
  eo.order_cap = std::max(eo.order_cap, total);
  const JetPolynomial product = expand_product(c.factors, eo);
  const JetPolynomial target = to_jet(p, 1);
  const bool nonlinear = p.linearity() == Linearity::QuasiLinear;
  collect(rep, Labeler{false, nonlinear, p.n()}, 1, 1, max_order, target, product, PrintOptions{p.m()});
  finish(rep, opts);

  const bool symbolic = has_symbols(p) || std::any_of(c.factors.begin(), c.factors.end(),
                                                      [](const DiffOperator& f) { return has_symbols(f); });
  if (!opts.numeric) {
    rep.numeric_note = "disabled";
  } else if (symbolic) {
    rep.numeric_note = "skipped: symbolic coefficients";
  } else {
    Rng rng(opts.seed);
    for (int trial = 0; trial < 2; ++trial) {
      std::vector<Expr> u;
      for (int j = 0; j < p.m(); ++j) u.push_back(random_test_polynomial(rng, p.n(), 4));
      const auto repl = u_bindings(u);
      Expr v = u[0];
      for (auto it = c.factors.rbegin(); it != c.factors.rend(); ++it) v = apply_with(*it, repl, v);
      numeric_compare(rep, {difactor::apply(p, 1, u)}, {v}, p.n(), rng, opts);
    }
    finish(rep, opts);
  }
  return rep;
}

CheckReport check_candidate(const MatrixOperator& p, const Candidate& c, const CheckOptions& opts) {
  if (!c.is_matrix()) throw ShapeMismatch("matrix operator needs matrix factors");
  for (const auto& f : c.matrix_factors) {
    if (f.n() != p.n() || f.m() != p.m()) throw ShapeMismatch("factor dimensions differ from the operator");
  }
  CheckReport rep;
  int total = 0;
  for (const auto& f : c.matrix_factors) {
    int k = 0;
    for (const auto& row : f.order_profile()) {
      for (int o : row) k = std::max(k, o);
    }
    total += k;
  }
  int p_order = 0;
  for (const auto& row : p.order_profile()) {
    for (int o : row) p_order = std::max(p_order, o);
  }
  const int max_order = std::max(p_order, total);
  ExpandOptions eo;
  eo.order_cap = std::max(eo.order_cap, total);
  const JetGrid grid = matrix_expand_product(c.matrix_factors, eo);
  const bool nonlinear = p.linearity() == Linearity::QuasiLinear;
  const Labeler lab{true, nonlinear, p.n()};
  for (int r = 1; r <= p.m(); ++r) {
    for (int q = 1; q <= p.m(); ++q) {
      collect(rep, lab, r, q, entry_order(true, r, q, max_order), to_jet(p.at(r, q), q), grid[r - 1][q - 1],
              PrintOptions{p.m()});
    }
  }
  finish(rep, opts);

  bool symbolic = has_symbols(p);
  for (const auto& f : c.matrix_factors) symbolic = symbolic || has_symbols(f);
  if (!opts.numeric) {
    rep.numeric_note = "disabled";
  } else if (symbolic) {
    rep.numeric_note = "skipped: symbolic coefficients";
  } else {
    Rng rng(opts.seed);
    const int m = p.m();
    for (int trial = 0; trial < 2; ++trial) {
      std::vector<Expr> u;
      for (int j = 0; j < m; ++j) u.push_back(random_test_polynomial(rng, p.n(), 4));
      const auto repl = u_bindings(u);
      std::vector<Expr> v = u;
      for (auto it = c.matrix_factors.rbegin(); it != c.matrix_factors.rend(); ++it) {
        std::vector<Expr> next;
        for (int r = 1; r <= m; ++r) {
          std::vector<Expr> terms;
          for (int l = 1; l <= m; ++l) terms.push_back(apply_with(it->at(r, l), repl, v[l - 1]));
          next.push_back(simplify(Expr::sum(std::move(terms))));
        }
        v = std::move(next);
      }
      numeric_compare(rep, difactor::apply(p, u), v, p.n(), rng, opts);
    }
    finish(rep, opts);
  }
  return rep;
}

}  // namespace difactor
