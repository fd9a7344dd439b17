#include "difactor/expr.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "difactor/detail/node.hpp"
#include "difactor/errors.hpp"

namespace difactor {

namespace detail {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_mpz(const mpz_class& z) {
  std::size_t h = static_cast<std::size_t>(mpz_sgn(z.get_mpz_t()) + 2);
  const auto limbs = mpz_size(z.get_mpz_t());
  for (std::size_t i = 0; i < limbs && i < 4; ++i) {
    h = mix(h, static_cast<std::size_t>(mpz_getlimbn(z.get_mpz_t(), static_cast<mp_size_t>(i))));
  }
  return h;
}

std::size_t hash_var(const VarId& v) {
  std::size_t h = mix(static_cast<std::size_t>(v.kind), static_cast<std::size_t>(v.index));
  h = mix(h, static_cast<std::size_t>(v.deriv.order));
  return mix(h, static_cast<std::size_t>(v.deriv.slot));
}

}  // namespace

Expr make(NodeKind kind, std::variant<std::monostate, Rational, VarId, Symbol, FunKind, long> data,
          std::vector<Expr> args, bool canonical) {
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->canonical = canonical;
  std::size_t h = static_cast<std::size_t>(kind) * 1315423911u;
  switch (kind) {
    case NodeKind::Const: {
      const auto& q = std::get<Rational>(data);
      h = mix(h, hash_mpz(q.get_num()));
      h = mix(h, hash_mpz(q.get_den()));
      break;
    }
    case NodeKind::Var:
      h = mix(h, hash_var(std::get<VarId>(data)));
      break;
    case NodeKind::Sym: {
      const auto& s = std::get<Symbol>(data);
      h = mix(h, std::hash<std::string>{}(s.name));
      for (int i : s.indices) h = mix(h, static_cast<std::size_t>(i));
      h = mix(h, s.depends_on_u ? 7u : 3u);
      for (const auto& d : s.derivs) h = mix(h, hash_var(d));
      break;
    }
    case NodeKind::Fun:
      h = mix(h, static_cast<std::size_t>(std::get<FunKind>(data)));
      break;
    case NodeKind::Power:
      h = mix(h, static_cast<std::size_t>(std::get<long>(data)));
      break;
    default:
      break;
  }
  for (const auto& a : args) h = mix(h, a.hash());
  n->hash = h;
  n->data = std::move(data);
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

}  // namespace detail

using detail::make;

namespace {

const Expr& zero_expr() {
  static const Expr z = make(NodeKind::Const, Rational(0), {}, true);
  return z;
}

const Expr& one_expr() {
  static const Expr o = make(NodeKind::Const, Rational(1), {}, true);
  return o;
}

}  // namespace

VarId VarId::x(int i) {
  if (i < 1) throw InvalidIndex("independent variable index must be >= 1");
  return VarId{Kind::Independent, i, DerivIndex{}};
}

VarId VarId::u(int j) {
  if (j < 1) throw InvalidIndex("dependent variable index must be >= 1");
  return VarId{Kind::Dependent, j, DerivIndex{}};
}

VarId VarId::jet(int j, const DerivIndex& d) {
  if (d.order == 0) return u(j);
  if (j < 1) throw InvalidIndex("dependent variable index must be >= 1");
  return VarId{Kind::Jet, j, d};
}

std::string_view fun_name(FunKind f) {
  switch (f) {
    case FunKind::Exp: return "exp";
    case FunKind::Log: return "log";
    case FunKind::Sin: return "sin";
    case FunKind::Cos: return "cos";
    case FunKind::Sqrt: return "sqrt";
  }
  return "?";
}

Expr::Expr() : Expr(zero_expr()) {}
Expr::Expr(int v) : Expr(Rational(v)) {}
Expr::Expr(long v) : Expr(Rational(v)) {}
Expr::Expr(const Rational& v) {
  if (v == 0) {
    node_ = zero_expr().node_;
  } else if (v == 1) {
    node_ = one_expr().node_;
  } else {
    Rational c(v);
    c.canonicalize();
    node_ = make(NodeKind::Const, c, {}, true).node_;
  }
}

Expr Expr::constant(const Rational& v) { return Expr(v); }

Expr Expr::var(const VarId& v) {
  const VarId c = v.kind == VarId::Kind::Jet ? VarId::jet(v.index, v.deriv) : v;
  return make(NodeKind::Var, c, {}, true);
}

Expr Expr::symbol(const Symbol& s) {
  Symbol c = s;
  std::sort(c.derivs.begin(), c.derivs.end());
  return make(NodeKind::Sym, std::move(c), {}, true);
}

Expr Expr::fun(FunKind f, const Expr& arg) { return make(NodeKind::Fun, f, {arg}, false); }

Expr Expr::power(const Expr& base, long exponent) {
  if (exponent == 1) return base;
  if (exponent == 0) return Expr(1);
  if (exponent < 0 && base.is_zero_literal()) throw DomainError("negative power of zero");
  return make(NodeKind::Power, exponent, {base}, false);
}

Expr Expr::divide(const Expr& num, const Expr& den) {
  if (den.is_zero_literal()) throw DomainError("division by the constant 0");
  return make(NodeKind::Div, std::monostate{}, {num, den}, false);
}

Expr Expr::sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  for (auto& t : terms) {
    if (t.kind() == NodeKind::Sum) {
      flat.insert(flat.end(), t.args().begin(), t.args().end());
    } else if (!t.is_zero_literal()) {
      flat.push_back(std::move(t));
    }
  }
  if (flat.empty()) return Expr(0);
  if (flat.size() == 1) return flat.front();
  return make(NodeKind::Sum, std::monostate{}, std::move(flat), false);
}

Expr Expr::product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  for (auto& f : factors) {
    if (f.is_zero_literal()) return Expr(0);
    if (f.kind() == NodeKind::Product) {
      flat.insert(flat.end(), f.args().begin(), f.args().end());
    } else if (!f.is_one_literal()) {
      flat.push_back(std::move(f));
    }
  }
  if (flat.empty()) return Expr(1);
  if (flat.size() == 1) return flat.front();
  return make(NodeKind::Product, std::monostate{}, std::move(flat), false);
}

NodeKind Expr::kind() const { return node_->kind; }
bool Expr::is_canonical() const { return node_->canonical; }
const Rational& Expr::const_value() const { return std::get<Rational>(node_->data); }
const VarId& Expr::var_id() const { return std::get<VarId>(node_->data); }
const Symbol& Expr::symbol_data() const { return std::get<Symbol>(node_->data); }
FunKind Expr::fun_kind() const { return std::get<FunKind>(node_->data); }
long Expr::exponent() const { return std::get<long>(node_->data); }
const std::vector<Expr>& Expr::args() const { return node_->args; }
std::size_t Expr::hash() const { return node_->hash; }

bool Expr::is_zero_literal() const {
  return kind() == NodeKind::Const && const_value() == 0;
}

bool Expr::is_one_literal() const {
  return kind() == NodeKind::Const && const_value() == 1;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::sum({a, -b}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::divide(a, b); }
Expr operator-(const Expr& a) {
  if (a.is_const()) return Expr(Rational(-a.const_value()));
  return Expr::product({Expr(-1), a});
}

namespace {

int kind_rank(NodeKind k) { return static_cast<int>(k); }

template <typename T>
int three_way(const T& a, const T& b) {
  const auto c = a <=> b;
  if (c < 0) return -1;
  if (c > 0) return 1;
  return 0;
}

int compare_args(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  const auto n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a[i], b[i]); c != 0) return c;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

}  // namespace

int compare(const Expr& a, const Expr& b) {
  if (a.node_ptr() == b.node_ptr()) return 0;
  if (a.kind() != b.kind()) return kind_rank(a.kind()) < kind_rank(b.kind()) ? -1 : 1;
  switch (a.kind()) {
    case NodeKind::Const: {
      const int c = cmp(a.const_value(), b.const_value());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case NodeKind::Var:
      return three_way(a.var_id(), b.var_id());
    case NodeKind::Sym:
      return three_way(a.symbol_data(), b.symbol_data());
    case NodeKind::Fun:
      if (a.fun_kind() != b.fun_kind()) return a.fun_kind() < b.fun_kind() ? -1 : 1;
      return compare(a.args()[0], b.args()[0]);
    case NodeKind::Power:
      if (int c = compare(a.args()[0], b.args()[0]); c != 0) return c;
      return three_way(a.exponent(), b.exponent());
    default:
      return compare_args(a.args(), b.args());
  }
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ptr() == b.node_ptr()) return true;
  return a.hash() == b.hash() && compare(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr raw_diff(const Expr& e, const VarId& v) {
  switch (e.kind()) {
    case NodeKind::Const:
      return Expr(0);
    case NodeKind::Var:
      return e.var_id() == v ? Expr(1) : Expr(0);
    case NodeKind::Sym: {
      const auto& s = e.symbol_data();
      if (v.is_jet()) return Expr(0);
      if (v.is_dependent() && !s.depends_on_u) return Expr(0);
      Symbol d = s;
      d.derivs.push_back(v);
      return Expr::symbol(d);
    }
    case NodeKind::Fun: {
      const Expr& a = e.args()[0];
      const Expr da = raw_diff(a, v);
      if (da.is_zero_literal()) return Expr(0);
      switch (e.fun_kind()) {
        case FunKind::Exp: return e * da;
        case FunKind::Log: return Expr::divide(da, a);
        case FunKind::Sin: return Expr::fun(FunKind::Cos, a) * da;
        case FunKind::Cos: return -(Expr::fun(FunKind::Sin, a) * da);
        case FunKind::Sqrt: return Expr::divide(da, Expr(2) * e);
      }
      return Expr(0);
    }
    case NodeKind::Power: {
      const Expr& b = e.args()[0];
      const Expr db = raw_diff(b, v);
      if (db.is_zero_literal()) return Expr(0);
      const long k = e.exponent();
      return Expr::product({Expr(k), Expr::power(b, k - 1), db});
    }
    case NodeKind::Div: {
      const Expr& n = e.args()[0];
      const Expr& d = e.args()[1];
      const Expr dn = raw_diff(n, v);
      const Expr dd = raw_diff(d, v);
      if (dd.is_zero_literal()) return Expr::divide(dn, d);
      return Expr::divide(dn * d - n * dd, Expr::power(d, 2));
    }
    case NodeKind::Product: {
      std::vector<Expr> terms;
      const auto& fs = e.args();
      for (std::size_t i = 0; i < fs.size(); ++i) {
        Expr di = raw_diff(fs[i], v);
        if (di.is_zero_literal()) continue;
        std::vector<Expr> prod;
        prod.reserve(fs.size());
        for (std::size_t j = 0; j < fs.size(); ++j) prod.push_back(j == i ? di : fs[j]);
        terms.push_back(Expr::product(std::move(prod)));
      }
      return Expr::sum(std::move(terms));
    }
    case NodeKind::Sum: {
      std::vector<Expr> terms;
      for (const auto& t : e.args()) terms.push_back(raw_diff(t, v));
      return Expr::sum(std::move(terms));
    }
  }
  return Expr(0);
}

Expr rebuild(const Expr& e, std::vector<Expr> args) {
  switch (e.kind()) {
    case NodeKind::Fun: return Expr::fun(e.fun_kind(), args[0]);
    case NodeKind::Power: return Expr::power(args[0], e.exponent());
    case NodeKind::Div: return Expr::divide(args[0], args[1]);
    case NodeKind::Product: return Expr::product(std::move(args));
    case NodeKind::Sum: return Expr::sum(std::move(args));
    default: return e;
  }
}

template <typename Leaf>
Expr map_leaves(const Expr& e, const Leaf& leaf) {
  if (e.args().empty()) return leaf(e);
  std::vector<Expr> args;
  args.reserve(e.args().size());
  bool changed = false;
  for (const auto& a : e.args()) {
    args.push_back(map_leaves(a, leaf));
    changed = changed || !(args.back().node_ptr() == a.node_ptr());
  }
  return changed ? rebuild(e, std::move(args)) : e;
}

}  // namespace

Expr diff(const Expr& e, const VarId& v) {
  const VarId c = v.is_jet() ? VarId::jet(v.index, v.deriv) : v;
  return simplify(raw_diff(e, c));
}

Expr substitute(const Expr& e, const std::map<VarId, Expr>& repl) {
  return simplify(map_leaves(e, [&](const Expr& leaf) {
    if (leaf.kind() == NodeKind::Var) {
      if (auto it = repl.find(leaf.var_id()); it != repl.end()) return it->second;
    }
    return leaf;
  }));
}

Expr substitute_symbols(const Expr& e, const SymbolResolver& resolver) {
  return simplify(map_leaves(e, [&](const Expr& leaf) {
    if (leaf.kind() != NodeKind::Sym) return leaf;
    const auto& s = leaf.symbol_data();
    auto r = resolver(s.base());
    if (!r) return leaf;
    Expr out = *r;
    for (const auto& d : s.derivs) out = diff(out, d);
    return out;
  }));
}

// ---------------------------------------------------------------------------
// Evaluation

double eval(const Expr& e, const Bindings& bindings) {
  switch (e.kind()) {
    case NodeKind::Const:
      return e.const_value().get_d();
    case NodeKind::Var: {
      auto it = bindings.find(e.var_id());
      if (it == bindings.end()) throw UnboundVariable(to_string(e.var_id()));
      return it->second;
    }
    case NodeKind::Sym:
      throw UnboundVariable("coefficient symbol " + to_string(e));
    case NodeKind::Fun: {
      const double a = eval(e.args()[0], bindings);
      switch (e.fun_kind()) {
        case FunKind::Exp: return std::exp(a);
        case FunKind::Log:
          if (!(a > 0.0)) throw DomainError("log of non-positive value");
          return std::log(a);
        case FunKind::Sin: return std::sin(a);
        case FunKind::Cos: return std::cos(a);
        case FunKind::Sqrt:
          if (a < 0.0) throw DomainError("sqrt of negative value");
          return std::sqrt(a);
      }
      return 0.0;
    }
    case NodeKind::Power: {
      const double b = eval(e.args()[0], bindings);
      const long k = e.exponent();
      if (k < 0 && std::fabs(b) < 1e-300) throw DomainError("negative power of zero");
      return std::pow(b, static_cast<double>(k));
    }
    case NodeKind::Div: {
      const double n = eval(e.args()[0], bindings);
      const double d = eval(e.args()[1], bindings);
      if (std::fabs(d) < 1e-300) throw DomainError("division by zero");
      return n / d;
    }
    case NodeKind::Product: {
      double p = 1.0;
      for (const auto& f : e.args()) p *= eval(f, bindings);
      return p;
    }
    case NodeKind::Sum: {
      double s = 0.0;
      for (const auto& t : e.args()) s += eval(t, bindings);
      return s;
    }
  }
  return 0.0;
}

std::optional<Rational> as_constant(const Expr& e) {
  const Expr s = simplify(e);
  if (s.is_const()) return s.const_value();
  return std::nullopt;
}

bool is_zero(const Expr& e) { return simplify(e).is_zero_literal(); }

namespace {

void collect_vars(const Expr& e, std::set<VarId>& out) {
  if (e.kind() == NodeKind::Var) out.insert(e.var_id());
  for (const auto& a : e.args()) collect_vars(a, out);
}

}  // namespace

std::vector<VarId> free_vars(const Expr& e) {
  std::set<VarId> vs;
  collect_vars(e, vs);
  return {vs.begin(), vs.end()};
}

bool contains_var(const Expr& e, const std::function<bool(const VarId&)>& pred) {
  if (e.kind() == NodeKind::Var) return pred(e.var_id());
  if (e.kind() == NodeKind::Sym) {
    const auto& s = e.symbol_data();
    if (s.depends_on_u && pred(VarId::u(1))) return true;
    return false;
  }
  for (const auto& a : e.args()) {
    if (contains_var(a, pred)) return true;
  }
  return false;
}

bool contains_symbols(const Expr& e) {
  if (e.kind() == NodeKind::Sym) return true;
  for (const auto& a : e.args()) {
    if (contains_symbols(a)) return true;
  }
  return false;
}

bool contains_fun(const Expr& e) {
  if (e.kind() == NodeKind::Fun) return true;
  for (const auto& a : e.args()) {
    if (contains_fun(a)) return true;
  }
  return false;
}

ZeroTest zero_test(const Expr& e, std::uint64_t seed) {
  ZeroTest r;
  r.symbolic_zero = is_zero(e);
  if (contains_symbols(e)) return r;
  const auto vars = free_vars(e);
  std::mt19937_64 rng(seed);
  double max_abs = 0.0;
  int evaluated = 0;
  for (int k = 0; k < 8; ++k) {
    Bindings b;
    for (const auto& v : vars) {
      const double t = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      b[v] = -1.0 + 2.0 * t;
    }
    try {
      const double val = eval(e, b);
      if (!std::isfinite(val)) continue;
      max_abs = std::max(max_abs, std::fabs(val));
      ++evaluated;
    } catch (const DomainError&) {
    }
  }
  if (evaluated == 0) return r;
  r.probed = true;
  r.max_probe_value = max_abs;
  if (r.symbolic_zero) {
    r.probe_flag = max_abs > 1e-9;
  } else {
    r.probe_flag = max_abs <= 1e-300;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

namespace {

std::string dep_name(int j, const PrintOptions& opts) {
  if (opts.m == 1 && j == 1) return "u";
  return "u" + std::to_string(j);
}

}  // namespace

std::string to_string(const VarId& v, const PrintOptions& opts) {
  switch (v.kind) {
    case VarId::Kind::Independent: return "x" + std::to_string(v.index);
    case VarId::Kind::Dependent: return dep_name(v.index, opts);
    case VarId::Kind::Jet:
      return dep_name(v.index, opts) + "_{" + to_string(v.deriv) + "}";
  }
  return "?";
}

namespace {

enum Prec { kSum = 1, kProduct = 2, kUnary = 3, kPower = 4, kAtom = 5 };

struct Printer {
  const PrintOptions& opts;

  // A term is "negative" when it prints with a leading minus sign.
  static bool is_negative(const Expr& e) {
    if (e.is_const()) return e.const_value() < 0;
    if (e.kind() == NodeKind::Product && e.args()[0].is_const()) {
      return e.args()[0].const_value() < 0;
    }
    return false;
  }

  static Expr negate_term(const Expr& e) {
    if (e.is_const()) return Expr(Rational(-e.const_value()));
    std::vector<Expr> fs = e.args();
    Rational c = -fs[0].const_value();
    if (c == 1) {
      fs.erase(fs.begin());
    } else {
      fs[0] = Expr(c);
    }
    if (fs.size() == 1) return fs[0];
    return detail::make(NodeKind::Product, std::monostate{}, std::move(fs), false);
  }

  std::string wrap(const Expr& e, int min_prec) const {
    if (prec_of(e) < min_prec) return "(" + print(e) + ")";
    return print(e);
  }

  static int prec_of(const Expr& e) {
    switch (e.kind()) {
      case NodeKind::Const: {
        const auto& q = e.const_value();
        if (q < 0) return kUnary;
        if (q.get_den() != 1) return kProduct;
        return kAtom;
      }
      case NodeKind::Var:
      case NodeKind::Sym:
      case NodeKind::Fun:
        return kAtom;
      case NodeKind::Power:
        return e.exponent() < 0 ? kProduct : kPower;
      case NodeKind::Div:
      case NodeKind::Product:
        return is_negative(e) ? kUnary : kProduct;
      case NodeKind::Sum:
        return kSum;
    }
    return kAtom;
  }

  std::string print_symbol(const Symbol& s) const {
    std::string out = s.name;
    if (!s.indices.empty()) {
      out += "[";
      for (std::size_t i = 0; i < s.indices.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s.indices[i]);
      }
      out += "]";
    }
    if (s.derivs.empty()) return out;
    std::string d = "d(" + out;
    for (const auto& v : s.derivs) d += "," + to_string(v, opts);
    return d + ")";
  }

  std::string print_power_factor(const Expr& base, long k) const {
    if (k == 1) return wrap(base, kPower + 1);
    return wrap(base, kPower + 1) + "^" + std::to_string(k);
  }

  std::string print_product(const Expr& e) const {
    std::vector<Expr> fs = e.args();
    std::string sign;
    Rational coeff(1);
    if (!fs.empty() && fs[0].is_const()) {
      coeff = fs[0].const_value();
      fs.erase(fs.begin());
    }
    if (coeff < 0) {
      sign = "-";
      coeff = -coeff;
    }
    std::vector<std::string> num;
    std::vector<std::string> den;
    if (coeff.get_num() != 1 || (coeff.get_den() != 1 && false)) num.push_back(coeff.get_num().get_str());
    if (coeff.get_den() != 1) den.push_back(coeff.get_den().get_str());
    for (const auto& f : fs) {
      if (f.kind() == NodeKind::Power && f.exponent() < 0) {
        den.push_back(print_power_factor(f.args()[0], -f.exponent()));
      } else if (f.kind() == NodeKind::Div) {
        num.push_back(wrap(f, kProduct + 1));
      } else {
        num.push_back(wrap(f, kProduct + 1));
      }
    }
    std::string out = sign;
    if (num.empty()) {
      out += "1";
    } else {
      for (std::size_t i = 0; i < num.size(); ++i) {
        if (i) out += "*";
        out += num[i];
      }
    }
    if (!den.empty()) {
      out += "/";
      if (den.size() == 1) {
        out += den[0];
      } else {
        out += "(";
        for (std::size_t i = 0; i < den.size(); ++i) {
          if (i) out += "*";
          out += den[i];
        }
        out += ")";
      }
    }
    return out;
  }

  std::string print(const Expr& e) const {
    switch (e.kind()) {
      case NodeKind::Const:
        return to_string(e.const_value());
      case NodeKind::Var:
        return to_string(e.var_id(), opts);
      case NodeKind::Sym:
        return print_symbol(e.symbol_data());
      case NodeKind::Fun:
        return std::string(fun_name(e.fun_kind())) + "(" + print(e.args()[0]) + ")";
      case NodeKind::Power:
        if (e.exponent() < 0) return "1/" + print_power_factor(e.args()[0], -e.exponent());
        return print_power_factor(e.args()[0], e.exponent());
      case NodeKind::Div:
        return wrap(e.args()[0], kProduct) + "/" + wrap(e.args()[1], kProduct + 1);
      case NodeKind::Product:
        return print_product(e);
      case NodeKind::Sum: {
        std::string out;
        bool first = true;
        for (const auto& t : e.args()) {
          if (first) {
            out += print(t);
            first = false;
          } else if (is_negative(t)) {
            out += " - " + wrap(negate_term(t), kProduct);
          } else {
            out += " + " + wrap(t, kProduct);
          }
        }
        return out;
      }
    }
    return "?";
  }
};

}  // namespace

std::string to_string(const Expr& e, const PrintOptions& opts) {
  return Printer{opts}.print(e);
}

}  // namespace difactor
