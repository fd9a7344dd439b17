#include <algorithm>

#include "difactor/detail/node.hpp"
#include "difactor/errors.hpp"
#include "difactor/poly.hpp"

namespace difactor {

using detail::make;

namespace {

constexpr int kDivisionIterationCap = 20000;

bool is_kernel(const Expr& a) { return a.kind() == NodeKind::Sum; }

bool is_fun(const Expr& a, FunKind f) { return a.kind() == NodeKind::Fun && a.fun_kind() == f; }

long degree(const Monomial& m) {
  long d = 0;
  for (const auto& [a, k] : m) d += k;
  return d;
}

SparsePoly monomial_poly(Monomial m, const Rational& c = Rational(1)) {
  SparsePoly p;
  p.add_term(m, c);
  return p;
}

SparsePoly from_expr_impl(const Expr& e);

// Sorts and merges a raw atom list, then applies the exp/sqrt/kernel rewrites.
SparsePoly normalize(Monomial raw) {
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
  Monomial m;
  for (auto& [a, k] : raw) {
    if (!m.empty() && m.back().first == a) {
      m.back().second += k;
      if (m.back().second == 0) m.pop_back();
    } else if (k != 0) {
      m.emplace_back(a, k);
    }
  }
  int exp_count = 0;
  bool needs = false;
  for (const auto& [a, k] : m) {
    if (is_fun(a, FunKind::Exp)) {
      ++exp_count;
      if (k != 1) needs = true;
    } else if (is_fun(a, FunKind::Sqrt) && (k >= 2 || k <= -2)) {
      needs = true;
    } else if (is_kernel(a) && k > 0) {
      needs = true;
    }
  }
  if (exp_count > 1) needs = true;
  if (!needs) return monomial_poly(std::move(m));

  Monomial base;
  SparsePoly factor(Rational(1));
  std::vector<Expr> exp_args;
  for (const auto& [a, k] : m) {
    if (is_fun(a, FunKind::Exp)) {
      exp_args.push_back(Expr(k) * a.args()[0]);
    } else if (is_fun(a, FunKind::Sqrt) && (k >= 2 || k <= -2)) {
      factor = factor * from_expr_impl(Expr::power(a.args()[0], k / 2));
      if (k % 2 != 0) base.emplace_back(a, k % 2);
    } else if (is_kernel(a) && k > 0) {
      factor = factor * from_expr_impl(a).pow(static_cast<unsigned long>(k));
    } else {
      base.emplace_back(a, k);
    }
  }
  if (!exp_args.empty()) {
    const Expr arg = simplify(Expr::sum(exp_args));
    if (!arg.is_zero_literal()) {
      factor = factor * monomial_poly({{make(NodeKind::Fun, FunKind::Exp, {arg}, true), 1}});
    }
  }
  return monomial_poly(std::move(base)) * factor;
}

// p times a raw monomial, merging exponents before any rewrite.
SparsePoly mul_monomial(const SparsePoly& p, const Monomial& raw) {
  SparsePoly r;
  for (const auto& [m, c] : p.terms()) {
    Monomial all = m;
    all.insert(all.end(), raw.begin(), raw.end());
    const SparsePoly prod = normalize(std::move(all));
    for (const auto& [mm, cc] : prod.terms()) r.add_term(mm, c * cc);
  }
  return r;
}

Monomial inverse_monomial(const Monomial& m) {
  Monomial r = m;
  for (auto& [a, k] : r) k = -k;
  return r;
}

// Leading-coefficient sign of a canonical expression.
bool leading_negative(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Const: return e.const_value() < 0;
    case NodeKind::Product: return e.args()[0].is_const() && e.args()[0].const_value() < 0;
    case NodeKind::Sum: return leading_negative(e.args()[0]);
    default: return false;
  }
}

SparsePoly sqrt_of_rational(const Rational& q) {
  mpz_class n = q.get_num() * q.get_den();
  mpz_class s = 1;
  for (unsigned long p = 2; p <= 10000; ++p) {
    const mpz_class pp = mpz_class(p) * p;
    if (pp > n) break;
    while (n % pp == 0) {
      n /= pp;
      s *= p;
    }
  }
  if (mpz_perfect_square_p(n.get_mpz_t())) {
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    s *= r;
    n = 1;
  }
  Rational c(s, q.get_den());
  c.canonicalize();
  if (n == 1) return SparsePoly(c);
  return monomial_poly({{make(NodeKind::Fun, FunKind::Sqrt, {Expr(Rational(n))}, true), 1}}, c);
}

SparsePoly fun_poly(FunKind f, const Expr& arg) {
  auto atom = [&](const Expr& a) {
    return monomial_poly({{make(NodeKind::Fun, f, {a}, true), 1}});
  };
  switch (f) {
    case FunKind::Exp:
      if (arg.is_zero_literal()) return SparsePoly(Rational(1));
      return atom(arg);
    case FunKind::Log:
      if (arg.is_one_literal()) return SparsePoly();
      if (is_fun(arg, FunKind::Exp)) return from_expr_impl(arg.args()[0]);
      return atom(arg);
    case FunKind::Sin:
      if (arg.is_zero_literal()) return SparsePoly();
      if (leading_negative(arg)) return atom(simplify(-arg)).negated();
      return atom(arg);
    case FunKind::Cos:
      if (arg.is_zero_literal()) return SparsePoly(Rational(1));
      if (leading_negative(arg)) return atom(simplify(-arg));
      return atom(arg);
    case FunKind::Sqrt:
      if (arg.is_zero_literal()) return SparsePoly();
      if (arg.is_const() && arg.const_value() > 0) return sqrt_of_rational(arg.const_value());
      return atom(arg);
  }
  return atom(arg);
}

struct Split {
  SparsePoly numerator;                        // free of inverse kernels
  std::map<Expr, long, ExprLess> kernels;      // kernel -> remaining inverse power
};

// Writes p as numerator * prod kernel^(-e) with every cancellable kernel divided out.
Split split(const SparsePoly& p) {
  Split s;
  for (const auto& [m, c] : p.terms()) {
    for (const auto& [a, k] : m) {
      if (is_kernel(a) && k < 0) {
        auto& e = s.kernels[a];
        e = std::max(e, -k);
      }
    }
  }
  if (s.kernels.empty()) {
    s.numerator = p;
    return s;
  }
  Monomial shift;
  for (const auto& [a, e] : s.kernels) shift.emplace_back(a, e);
  s.numerator = mul_monomial(p, shift);
  if (s.numerator.is_zero()) {
    s.kernels.clear();
    return s;
  }
  for (auto it = s.kernels.begin(); it != s.kernels.end();) {
    const SparsePoly k = from_expr_impl(it->first);
    while (it->second > 0) {
      auto q = s.numerator.divide_exact(k);
      if (!q) break;
      s.numerator = std::move(*q);
      --it->second;
    }
    it = it->second == 0 ? s.kernels.erase(it) : std::next(it);
  }
  return s;
}

SparsePoly cancel(const SparsePoly& p) {
  Split s = split(p);
  if (s.kernels.empty()) return s.numerator;
  Monomial inv;
  for (const auto& [a, e] : s.kernels) inv.emplace_back(a, -e);
  return mul_monomial(s.numerator, inv);
}

SparsePoly inverse(const SparsePoly& p) {
  if (p.is_zero()) throw DomainError("division by zero");
  Split s = split(p);
  if (s.numerator.is_zero()) throw DomainError("division by zero");
  SparsePoly result;
  const auto& terms = s.numerator.terms();
  if (terms.size() == 1) {
    const auto& [m, c] = *terms.begin();
    result = normalize(inverse_monomial(m)) * Rational(1 / c);
  } else {
    // content: minimum exponent per atom, absent atoms counting as 0
    std::map<Expr, long, ExprLess> mins;
    for (const auto& [m, c] : terms) {
      for (const auto& [a, k] : m) mins.emplace(a, 0);
    }
    for (auto& [a, lo] : mins) {
      bool first = true;
      for (const auto& [m, c] : terms) {
        long v = 0;
        for (const auto& [b, k] : m) {
          if (b == a) v = k;
        }
        lo = first ? v : std::min(lo, v);
        first = false;
      }
    }
    Monomial content;
    for (const auto& [a, lo] : mins) {
      if (lo != 0) content.emplace_back(a, lo);
    }
    const Rational lead = terms.begin()->second;
    SparsePoly kernel = mul_monomial(s.numerator, inverse_monomial(content)) * Rational(1 / lead);
    result = normalize(inverse_monomial(content)) * Rational(1 / lead) *
             monomial_poly({{kernel.to_expr(), -1}});
  }
  for (const auto& [a, e] : s.kernels) {
    result = result * from_expr_impl(a).pow(static_cast<unsigned long>(e));
  }
  return result;
}

SparsePoly from_expr_impl(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Const:
      return SparsePoly(e.const_value());
    case NodeKind::Var:
    case NodeKind::Sym:
      return monomial_poly({{e, 1}});
    case NodeKind::Fun: {
      if (e.is_canonical()) return monomial_poly({{e, 1}});
      return fun_poly(e.fun_kind(), simplify(e.args()[0]));
    }
    case NodeKind::Power: {
      const Expr& b = e.args()[0];
      const long k = e.exponent();
      if (e.is_canonical()) return normalize({{b, k}});
      const SparsePoly p = from_expr_impl(b);
      if (k >= 0) return p.pow(static_cast<unsigned long>(k));
      return inverse(p).pow(static_cast<unsigned long>(-k));
    }
    case NodeKind::Div:
      return from_expr_impl(e.args()[0]) * inverse(from_expr_impl(e.args()[1]));
    case NodeKind::Product: {
      SparsePoly p(Rational(1));
      for (const auto& f : e.args()) {
        p = p * from_expr_impl(f);
        if (p.is_zero()) break;
      }
      return p;
    }
    case NodeKind::Sum: {
      SparsePoly p;
      for (const auto& t : e.args()) p = p + from_expr_impl(t);
      return p;
    }
  }
  return SparsePoly();
}

std::optional<Monomial> divide_monomial(const Monomial& a, const Monomial& b) {
  std::map<Expr, long, ExprLess> r(a.begin(), a.end());
  for (const auto& [atom, k] : b) {
    auto it = r.find(atom);
    if (it == r.end() || it->second < k) return std::nullopt;
    it->second -= k;
    if (it->second == 0) r.erase(it);
  }
  return Monomial(r.begin(), r.end());
}

bool has_negative(const SparsePoly& p) {
  for (const auto& [m, c] : p.terms()) {
    for (const auto& [a, k] : m) {
      if (k < 0) return true;
    }
  }
  return false;
}

bool has_reducible_atoms(const SparsePoly& p) {
  for (const auto& [m, c] : p.terms()) {
    for (const auto& [a, k] : m) {
      if (is_fun(a, FunKind::Exp) || is_fun(a, FunKind::Sqrt) || is_kernel(a)) return true;
    }
  }
  return false;
}

bool occurs_in(const Expr& needle, const Expr& hay) {
  if (needle == hay) return true;
  if (hay.kind() == NodeKind::Sym && needle.kind() == NodeKind::Var) {
    const auto& v = needle.var_id();
    if (v.is_independent()) return true;
    if (v.is_dependent() && hay.symbol_data().depends_on_u) return true;
  }
  for (const auto& a : hay.args()) {
    if (occurs_in(needle, a)) return true;
  }
  return false;
}

}  // namespace

bool MonomialLess::operator()(const Monomial& a, const Monomial& b) const {
  const long da = degree(a);
  const long db = degree(b);
  if (da != db) return da > db;
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a[i].first, b[i].first); c != 0) return c < 0;
    if (a[i].second != b[i].second) return a[i].second > b[i].second;
  }
  return a.size() < b.size();
}

SparsePoly::SparsePoly(const Rational& c) {
  if (c != 0) terms_.emplace(Monomial{}, c);
}

SparsePoly SparsePoly::atom(const Expr& a, long exponent) { return normalize({{a, exponent}}); }

SparsePoly SparsePoly::from_expr(const Expr& e) { return from_expr_impl(e); }

void SparsePoly::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

std::optional<Rational> SparsePoly::constant_value() const {
  if (terms_.empty()) return Rational(0);
  if (terms_.size() == 1 && terms_.begin()->first.empty()) return terms_.begin()->second;
  return std::nullopt;
}

SparsePoly SparsePoly::operator+(const SparsePoly& o) const {
  SparsePoly r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

SparsePoly SparsePoly::operator-(const SparsePoly& o) const {
  SparsePoly r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
  return r;
}

SparsePoly SparsePoly::operator*(const Rational& c) const {
  SparsePoly r;
  if (c == 0) return r;
  for (const auto& [m, v] : terms_) r.terms_.emplace(m, v * c);
  return r;
}

SparsePoly SparsePoly::operator*(const SparsePoly& o) const {
  SparsePoly r;
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : o.terms_) {
      Monomial raw = ma;
      raw.insert(raw.end(), mb.begin(), mb.end());
      const SparsePoly prod = normalize(std::move(raw));
      const Rational c = ca * cb;
      for (const auto& [m, v] : prod.terms_) r.add_term(m, v * c);
    }
  }
  return r;
}

SparsePoly SparsePoly::pow(unsigned long k) const {
  SparsePoly result(Rational(1));
  SparsePoly base = *this;
  while (k > 0) {
    if (k & 1UL) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

Expr SparsePoly::to_expr() const {
  std::vector<Expr> terms;
  terms.reserve(terms_.size());
  for (const auto& [m, c] : terms_) {
    std::vector<Expr> factors;
    if (c != 1 || m.empty()) factors.push_back(Expr(c));
    for (const auto& [a, k] : m) {
      factors.push_back(k == 1 ? a : make(NodeKind::Power, k, {a}, true));
    }
    if (factors.size() == 1) {
      terms.push_back(factors.front());
    } else {
      terms.push_back(make(NodeKind::Product, std::monostate{}, std::move(factors), true));
    }
  }
  if (terms.empty()) return Expr(0);
  if (terms.size() == 1) return terms.front();
  return make(NodeKind::Sum, std::monostate{}, std::move(terms), true);
}

std::optional<SparsePoly> SparsePoly::divide_exact(const SparsePoly& d) const {
  if (d.is_zero()) return std::nullopt;
  if (is_zero()) return SparsePoly();
  if (d.terms_.size() == 1) {
    const auto& [m, c] = *d.terms_.begin();
    return mul_monomial(*this, inverse_monomial(m)) * Rational(1 / c);
  }
  if (has_negative(d) || has_reducible_atoms(d)) return std::nullopt;

  // Clear negative exponents so leading-term division terminates.
  std::map<Expr, long, ExprLess> neg;
  for (const auto& [m, c] : terms_) {
    for (const auto& [a, k] : m) {
      if (k < 0) neg[a] = std::max(neg[a], -k);
    }
  }
  Monomial shift(neg.begin(), neg.end());
  SparsePoly r = neg.empty() ? *this : mul_monomial(*this, shift);
  SparsePoly q;
  const auto& [dm, dc] = *d.terms_.begin();
  for (int iter = 0; !r.is_zero(); ++iter) {
    if (iter > kDivisionIterationCap) return std::nullopt;
    const auto& [rm, rc] = *r.terms_.begin();
    auto qm = divide_monomial(rm, dm);
    if (!qm) return std::nullopt;
    const Rational qc = rc / dc;
    q.add_term(*qm, qc);
    r = r - monomial_poly(*qm, qc) * d;
  }
  if (!neg.empty()) q = mul_monomial(q, inverse_monomial(shift));
  return q;
}

std::optional<std::map<long, SparsePoly>> SparsePoly::coefficients_in(const Expr& atom) const {
  std::map<long, SparsePoly> out;
  for (const auto& [m, c] : terms_) {
    long e = 0;
    Monomial rest;
    for (const auto& [a, k] : m) {
      if (a == atom) {
        e = k;
      } else {
        if (occurs_in(atom, a)) return std::nullopt;
        rest.emplace_back(a, k);
      }
    }
    if (e < 0) return std::nullopt;
    out[e].add_term(rest, c);
  }
  return out;
}

std::optional<SparsePoly> poly_sqrt(const SparsePoly& p) {
  if (p.is_zero()) return SparsePoly();
  if (has_negative(p)) return std::nullopt;
  const auto& [lm, lc] = *p.terms().begin();
  if (lc < 0 || !mpz_perfect_square_p(lc.get_num().get_mpz_t()) ||
      !mpz_perfect_square_p(lc.get_den().get_mpz_t())) {
    return std::nullopt;
  }
  Monomial half;
  for (const auto& [a, k] : lm) {
    if (k % 2 != 0) return std::nullopt;
    half.emplace_back(a, k / 2);
  }
  mpz_class rn;
  mpz_class rd;
  mpz_sqrt(rn.get_mpz_t(), lc.get_num().get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), lc.get_den().get_mpz_t());
  const Rational root_c(rn, rd);
  SparsePoly root = monomial_poly(half, root_c);
  const std::size_t cap = p.terms().size() + 4;
  for (std::size_t iter = 0; iter <= cap; ++iter) {
    const SparsePoly r = p - root * root;
    if (r.is_zero()) return root;
    const auto& [rm, rc] = *r.terms().begin();
    auto qm = divide_monomial(rm, half);
    if (!qm) return std::nullopt;
    if (!MonomialLess{}(half, *qm)) return std::nullopt;  // must be a lower term
    root = root + monomial_poly(*qm, rc / (2 * root_c));
  }
  return std::nullopt;
}

Expr canonical_expr(const SparsePoly& p) { return cancel(p).to_expr(); }

Expr simplify(const Expr& e) {
  if (e.is_canonical()) return e;
  return cancel(from_expr_impl(e)).to_expr();
}

}  // namespace difactor
