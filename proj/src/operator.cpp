#include "difactor/operator.hpp"

#include <algorithm>

#include "difactor/errors.hpp"
#include "difactor/poly.hpp"

namespace difactor {

namespace {

bool references_dependent(const Expr& e) {
  return contains_var(e, [](const VarId& v) { return v.is_dependent(); });
}

bool references_jet(const Expr& e) {
  return contains_var(e, [](const VarId& v) { return v.is_jet(); });
}

int max_dependent_index(const Expr& e, int m) {
  int hi = 0;
  if (contains_symbols(e) &&
      contains_var(e, [](const VarId& v) { return v.is_dependent(); })) {
    hi = m;
  }
  for (const auto& v : free_vars(e)) {
    if (v.is_dependent() || v.is_jet()) hi = std::max(hi, v.index);
  }
  return hi;
}

int monomial_weight(const JetMonomial& mono) {
  int w = 0;
  for (const auto& [v, k] : mono) w += v.deriv.order * k;
  return w;
}

}  // namespace

// ---------------------------------------------------------------------------

DiffOperator::DiffOperator(int n, int m, Linearity lin) : n_(n), m_(m), lin_(lin) {
  if (n < 1 || m < 1) throw InvalidIndex("operator dimensions must be positive");
}

void DiffOperator::set(const DerivIndex& d, const Expr& c) {
  if (d.n != n_) throw InvalidIndex("index " + to_string(d) + " built for a different n");
  DerivIndex::make(n_, d.order, d.slot);
  const Expr s = simplify(c);
  if (references_jet(s)) throw ValidationError("coefficient references a jet variable");
  if (lin_ == Linearity::Linear && references_dependent(s)) {
    throw ValidationError("linear coefficient references a dependent variable");
  }
  for (const auto& v : free_vars(s)) {
    if (v.is_independent() && v.index > n_) throw ValidationError("coefficient references x" + std::to_string(v.index));
    if (v.is_dependent() && v.index > m_) throw ValidationError("coefficient references u" + std::to_string(v.index));
  }
  if (s.is_zero_literal()) {
    coeffs_.erase(d);
  } else {
    coeffs_.insert_or_assign(d, s);
  }
}

Expr DiffOperator::coeff(const DerivIndex& d) const {
  auto it = coeffs_.find(d);
  return it == coeffs_.end() ? Expr(0) : it->second;
}

int DiffOperator::order() const {
  int k = -1;
  for (const auto& [d, c] : coeffs_) k = std::max(k, d.order);
  return k;
}

bool operator==(const DiffOperator& a, const DiffOperator& b) {
  return a.n_ == b.n_ && a.m_ == b.m_ && a.lin_ == b.lin_ && a.coeffs_ == b.coeffs_;
}

MatrixOperator::MatrixOperator(int n, int m, Linearity lin)
    : n_(n), m_(m), lin_(lin), cells_(static_cast<std::size_t>(m) * m, DiffOperator(n, m, lin)) {}

DiffOperator& MatrixOperator::at(int p, int q) {
  if (p < 1 || q < 1 || p > m_ || q > m_) throw InvalidIndex("matrix entry out of range");
  return cells_[static_cast<std::size_t>((p - 1) * m_ + (q - 1))];
}

const DiffOperator& MatrixOperator::at(int p, int q) const {
  if (p < 1 || q < 1 || p > m_ || q > m_) throw InvalidIndex("matrix entry out of range");
  return cells_[static_cast<std::size_t>((p - 1) * m_ + (q - 1))];
}

std::vector<std::vector<int>> MatrixOperator::order_profile() const {
  std::vector<std::vector<int>> out(m_, std::vector<int>(m_));
  for (int p = 1; p <= m_; ++p) {
    for (int q = 1; q <= m_; ++q) out[p - 1][q - 1] = at(p, q).order();
  }
  return out;
}

bool MatrixOperator::is_factor_shaped() const {
  for (int p = 1; p <= m_; ++p) {
    for (int q = 1; q <= m_; ++q) {
      if (at(p, q).order() > (p == q ? 1 : 0)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

JetMonomial jet_monomial(int j, const DerivIndex& d) { return {{VarId::jet(j, d), 1}}; }

Expr canonicalize_jet_vars(const Expr& e) {
  std::map<VarId, Expr> repl;
  for (const auto& v : free_vars(e)) {
    if (!v.is_jet()) continue;
    const DerivIndex c = canonical_slot(v.deriv);
    if (c != v.deriv) repl.emplace(v, Expr::var(VarId::jet(v.index, c)));
  }
  if (repl.empty()) return simplify(e);
  return substitute(e, repl);
}

JetPolynomial JetPolynomial::from_expr(const Expr& e, int n, int m, int q) {
  const SparsePoly poly = SparsePoly::from_expr(canonicalize_jet_vars(e));
  const Expr uq = Expr::u(q);
  std::map<JetMonomial, SparsePoly> collected;
  for (const auto& [mono, c] : poly.terms()) {
    JetMonomial key;
    Monomial rest;
    for (const auto& [a, k] : mono) {
      if (a.kind() == NodeKind::Var && a.var_id().is_jet() && k > 0) {
        key.emplace_back(a.var_id(), static_cast<int>(k));
      } else {
        rest.emplace_back(a, k);
      }
    }
    if (key.empty()) {
      for (auto it = rest.begin(); it != rest.end(); ++it) {
        if (it->first == uq && it->second > 0) {
          key.emplace_back(VarId::u(q), 1);
          if (--it->second == 0) rest.erase(it);
          break;
        }
      }
    }
    collected[key].add_term(rest, c);
  }
  JetPolynomial out(n, m, q);
  for (const auto& [key, coeff] : collected) {
    Expr c = canonical_expr(coeff);
    if (!c.is_zero_literal()) out.terms_.emplace(key, std::move(c));
  }
  return out;
}

Expr JetPolynomial::to_expr() const {
  std::vector<Expr> terms;
  for (const auto& [mono, c] : terms_) {
    std::vector<Expr> fs{c};
    for (const auto& [v, k] : mono) fs.push_back(Expr::power(Expr::var(v), k));
    terms.push_back(Expr::product(std::move(fs)));
  }
  return simplify(Expr::sum(std::move(terms)));
}

Expr JetPolynomial::coeff(const JetMonomial& mono) const {
  auto it = terms_.find(mono);
  return it == terms_.end() ? Expr(0) : it->second;
}

bool JetPolynomial::is_linear() const {
  for (const auto& [mono, c] : terms_) {
    if (mono.size() != 1 || mono[0].second != 1 || mono[0].first.index != q_) return false;
  }
  return true;
}

JetPolynomial operator-(const JetPolynomial& a, const JetPolynomial& b) {
  JetPolynomial out = a;
  for (const auto& [mono, c] : b.terms_) {
    auto it = out.terms_.find(mono);
    if (it == out.terms_.end()) {
      out.terms_.emplace(mono, simplify(-c));
    } else {
      it->second = simplify(it->second - c);
      if (it->second.is_zero_literal()) out.terms_.erase(it);
    }
  }
  return out;
}

JetPolynomial canonicalize_jet(const JetPolynomial& p) {
  return JetPolynomial::from_expr(p.to_expr(), p.n(), p.m(), p.target());
}

Expr total_derivative(const Expr& e, Axis i, int n, int m) {
  std::vector<Expr> terms{diff(e, VarId::x(i))};
  const DerivIndex first = DerivIndex::make(n, 1, static_cast<std::uint64_t>(i));
  for (int j = 1; j <= m; ++j) {
    const Expr d = diff(e, VarId::u(j));
    if (!d.is_zero_literal()) terms.push_back(d * Expr::var(VarId::jet(j, first)));
  }
  for (const auto& v : free_vars(e)) {
    if (!v.is_jet()) continue;
    const Expr d = diff(e, v);
    if (!d.is_zero_literal()) {
      terms.push_back(d * Expr::var(VarId::jet(v.index, compose_index(i, v.deriv))));
    }
  }
  return canonicalize_jet_vars(Expr::sum(std::move(terms)));
}

Expr apply_to_jet(const DiffOperator& op, const Expr& f) {
  std::map<std::vector<Axis>, Expr> memo{{{}, f}};
  std::vector<Expr> terms;
  for (const auto& [d, c] : op.coeffs()) {
    const auto axes = index_to_axes(d);
    std::vector<Axis> prefix;
    Expr cur = f;
    for (Axis a : axes) {
      prefix.push_back(a);
      auto it = memo.find(prefix);
      if (it == memo.end()) {
        cur = total_derivative(cur, a, op.n(), op.m());
        memo.emplace(prefix, cur);
      } else {
        cur = it->second;
      }
    }
    terms.push_back(c * cur);
  }
  return simplify(Expr::sum(std::move(terms)));
}

JetPolynomial to_jet(const DiffOperator& op, int q) {
  return JetPolynomial::from_expr(apply_to_jet(op, Expr::u(q)), op.n(), op.m(), q);
}

namespace {

Expr partial_along(const Expr& f, const std::vector<Axis>& axes) {
  Expr cur = f;
  for (Axis a : axes) cur = diff(cur, VarId::x(a));
  return cur;
}

std::map<VarId, Expr> dependent_bindings(const std::vector<Expr>& u_exprs) {
  std::map<VarId, Expr> repl;
  for (std::size_t j = 0; j < u_exprs.size(); ++j) {
    repl.emplace(VarId::u(static_cast<int>(j) + 1), u_exprs[j]);
  }
  return repl;
}

}  // namespace

Expr apply(const DiffOperator& op, int target, const std::vector<Expr>& u_exprs) {
  if (target < 1 || static_cast<std::size_t>(target) > u_exprs.size()) {
    throw ArityMismatch("no expression for component " + std::to_string(target));
  }
  const auto repl = dependent_bindings(u_exprs);
  std::vector<Expr> terms;
  for (const auto& [d, c] : op.coeffs()) {
    if (max_dependent_index(c, op.m()) > static_cast<int>(u_exprs.size())) {
      throw ArityMismatch("coefficient references a component without an expression");
    }
    terms.push_back(substitute(c, repl) * partial_along(u_exprs[target - 1], index_to_axes(d)));
  }
  return simplify(Expr::sum(std::move(terms)));
}

std::vector<Expr> apply(const MatrixOperator& op, const std::vector<Expr>& u_exprs) {
  if (static_cast<int>(u_exprs.size()) != op.m()) throw ArityMismatch("vector length differs from m");
  std::vector<Expr> out;
  for (int p = 1; p <= op.m(); ++p) {
    std::vector<Expr> terms;
    for (int q = 1; q <= op.m(); ++q) terms.push_back(apply(op.at(p, q), q, u_exprs));
    out.push_back(simplify(Expr::sum(std::move(terms))));
  }
  return out;
}

Expr instantiate(const Expr& jet_expr, const std::vector<Expr>& u_exprs, int n) {
  std::map<VarId, Expr> repl;
  for (const auto& v : free_vars(jet_expr)) {
    if (v.is_independent()) continue;
    if (v.index < 1 || static_cast<std::size_t>(v.index) > u_exprs.size()) {
      throw ArityMismatch("no expression for component " + std::to_string(v.index));
    }
    if (v.is_dependent()) {
      repl.emplace(v, u_exprs[v.index - 1]);
    } else {
      if (v.deriv.n != n) throw InvalidIndex("jet variable built for a different n");
      repl.emplace(v, partial_along(u_exprs[v.index - 1], index_to_axes(v.deriv)));
    }
  }
  return substitute(jet_expr, repl);
}

JetPolynomial expand_product(const std::vector<DiffOperator>& factors, const ExpandOptions& opts) {
  if (factors.empty()) throw ShapeMismatch("empty product");
  const int n = factors.front().n();
  const int m = factors.front().m();
  int total = 0;
  for (const auto& f : factors) {
    if (f.n() != n || f.m() != m) throw ShapeMismatch("factors disagree on (n, m)");
    total += std::max(0, f.order());
  }
  if (total > opts.order_cap) {
    throw OrderOverflow("product order " + std::to_string(total) + " exceeds cap " +
                        std::to_string(opts.order_cap));
  }
  Expr f = Expr::u(opts.target);
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) f = apply_to_jet(*it, f);
  return JetPolynomial::from_expr(f, n, m, opts.target);
}

JetGrid matrix_expand_product(const std::vector<MatrixOperator>& factors, const ExpandOptions& opts) {
  if (factors.empty()) throw ShapeMismatch("empty product");
  const int n = factors.front().n();
  const int m = factors.front().m();
  int total = 0;
  for (const auto& f : factors) {
    if (f.n() != n || f.m() != m) throw ShapeMismatch("factors disagree on (n, m)");
    int k = 0;
    for (const auto& row : f.order_profile()) {
      for (int o : row) k = std::max(k, o);
    }
    total += k;
  }
  if (total > opts.order_cap) {
    throw OrderOverflow("product order " + std::to_string(total) + " exceeds cap " +
                        std::to_string(opts.order_cap));
  }
  JetGrid grid(m, std::vector<JetPolynomial>(m));
  for (int q = 1; q <= m; ++q) {
    std::vector<Expr> col(m, Expr(0));
    col[q - 1] = Expr::u(q);
    for (auto it = factors.rbegin(); it != factors.rend(); ++it) {
      std::vector<Expr> next;
      for (int p = 1; p <= m; ++p) {
        std::vector<Expr> terms;
        for (int l = 1; l <= m; ++l) {
          if (!col[l - 1].is_zero_literal()) terms.push_back(apply_to_jet(it->at(p, l), col[l - 1]));
        }
        next.push_back(simplify(Expr::sum(std::move(terms))));
      }
      col = std::move(next);
    }
    for (int p = 1; p <= m; ++p) grid[p - 1][q - 1] = JetPolynomial::from_expr(col[p - 1], n, m, q);
  }
  return grid;
}

std::optional<DiffOperator> to_operator(const JetPolynomial& p, Linearity lin) {
  if (!p.is_linear()) return std::nullopt;
  DiffOperator op(p.n(), p.m(), lin);
  for (const auto& [mono, c] : p.terms()) op.set(mono[0].first.deriv.order == 0 && mono[0].first.is_dependent()
                                                     ? DerivIndex::identity(p.n())
                                                     : mono[0].first.deriv,
                                                 c);
  return op;
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const JetMonomial& mono, const PrintOptions& opts) {
  std::string out;
  for (const auto& [v, k] : mono) {
    if (!out.empty()) out += "*";
    out += to_string(v, opts);
    if (k != 1) out += "^" + std::to_string(k);
  }
  return out.empty() ? "1" : out;
}

namespace {

std::string scaled_term(const Expr& c, const std::string& tail, const PrintOptions& opts) {
  if (c.is_one_literal()) return tail;
  if (c.is_const() && c.const_value() == -1) return "-" + tail;
  std::string cs = to_string(c, opts);
  if (c.kind() == NodeKind::Sum) cs = "(" + cs + ")";
  if (tail == "1") return cs;
  return cs + "*" + tail;
}

std::string join_terms(const std::vector<std::string>& parts) {
  if (parts.empty()) return "0";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].front() == '-') {
      out += " - " + parts[i].substr(1);
    } else {
      out += " + " + parts[i];
    }
  }
  return out;
}

}  // namespace

std::string to_string(const JetPolynomial& p, const PrintOptions& opts) {
  std::vector<std::pair<const JetMonomial*, const Expr*>> order;
  for (const auto& [mono, c] : p.terms()) order.emplace_back(&mono, &c);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    return monomial_weight(*a.first) > monomial_weight(*b.first);
  });
  std::vector<std::string> parts;
  for (const auto& [mono, c] : order) parts.push_back(scaled_term(*c, to_string(*mono, opts), opts));
  return join_terms(parts);
}

std::string to_string(const DiffOperator& op, const PrintOptions& opts) {
  // Highest order first, slots ascending within an order.
  std::vector<std::pair<DerivIndex, Expr>> items(op.coeffs().begin(), op.coeffs().end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.first.order != b.first.order ? a.first.order > b.first.order : a.first.slot < b.first.slot;
  });
  std::vector<std::string> parts;
  for (const auto& [d, c] : items) {
    parts.push_back(scaled_term(c, d.order == 0 ? "1" : "D_{" + to_string(d) + "}", opts));
  }
  return join_terms(parts);
}

}  // namespace difactor
