#pragma once

// Immutable symbolic expressions over independent variables x1..xn, dependent
// variables u1..um, jet variables and opaque coefficient symbols, with exact
// rational constants.
//
// Expressions built with the arithmetic operators are raw trees. simplify()
// maps them to a canonical form: sums and products flattened and ordered,
// constants folded, polynomial parts fully expanded, division represented by
// negative integer powers.

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "difactor/jet.hpp"

namespace difactor {

using Rational = mpq_class;

struct VarId {
  enum class Kind : std::uint8_t { Independent, Dependent, Jet };

  Kind kind = Kind::Independent;
  int index = 1;     // i for x_i, j for u_j and jet variables
  DerivIndex deriv;  // jet variables only

  static VarId x(int i);
  static VarId u(int j);
  /// jet(j, (0,1)) is the dependent variable u_j itself.
  static VarId jet(int j, const DerivIndex& d);

  bool is_independent() const { return kind == Kind::Independent; }
  bool is_dependent() const { return kind == Kind::Dependent; }
  bool is_jet() const { return kind == Kind::Jet; }

  auto operator<=>(const VarId&) const = default;
};

/// An opaque coefficient function such as b[2,1,1], optionally differentiated.
/// Every symbol depends on all independent variables; depends_on_u adds all
/// dependent variables.
struct Symbol {
  std::string name;
  std::vector<int> indices;
  bool depends_on_u = false;
  std::vector<VarId> derivs;  // sorted; empty for the undifferentiated symbol

  Symbol base() const { return Symbol{name, indices, depends_on_u, {}}; }
  auto operator<=>(const Symbol&) const = default;
};

enum class NodeKind : std::uint8_t { Const, Var, Sym, Fun, Power, Div, Product, Sum };
enum class FunKind : std::uint8_t { Exp, Log, Sin, Cos, Sqrt };

std::string_view fun_name(FunKind f);

class Expr;

namespace detail {
struct Node;
}

class Expr {
 public:
  Expr();  // the constant 0
  Expr(int v);
  Expr(long v);
  Expr(const Rational& v);

  static Expr constant(const Rational& v);
  static Expr var(const VarId& v);
  static Expr x(int i) { return var(VarId::x(i)); }
  static Expr u(int j = 1) { return var(VarId::u(j)); }
  static Expr symbol(const Symbol& s);
  static Expr fun(FunKind f, const Expr& arg);
  static Expr power(const Expr& base, long exponent);
  /// Throws DomainError when den is the literal constant 0.
  static Expr divide(const Expr& num, const Expr& den);
  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);

  NodeKind kind() const;
  bool is_const() const { return kind() == NodeKind::Const; }
  bool is_canonical() const;

  const Rational& const_value() const;  // Const
  const VarId& var_id() const;          // Var
  const Symbol& symbol_data() const;    // Sym
  FunKind fun_kind() const;             // Fun
  long exponent() const;                // Power
  const std::vector<Expr>& args() const;

  std::size_t hash() const;

  bool is_zero_literal() const;
  bool is_one_literal() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

  /// Structural equality.
  friend bool operator==(const Expr& a, const Expr& b);

  // Internal: node access for the simplifier and printer.
  explicit Expr(std::shared_ptr<const detail::Node> n) : node_(std::move(n)) {}
  const detail::Node& node() const { return *node_; }
  const detail::Node* node_ptr() const { return node_.get(); }

 private:
  std::shared_ptr<const detail::Node> node_;
};

/// Total order on expressions (structural).
int compare(const Expr& a, const Expr& b);

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

/// Canonical form; idempotent.
Expr simplify(const Expr& e);

/// Partial derivative treating every other variable (including jet variables)
/// as an independent symbol. The result is simplified.
Expr diff(const Expr& e, const VarId& v);

/// Replaces variables; the result is simplified.
Expr substitute(const Expr& e, const std::map<VarId, Expr>& repl);

/// Replaces coefficient symbols. The resolver receives the undifferentiated
/// symbol; derivatives recorded on the symbol are applied to its replacement.
/// Symbols for which the resolver returns nullopt are kept.
using SymbolResolver = std::function<std::optional<Expr>(const Symbol&)>;
Expr substitute_symbols(const Expr& e, const SymbolResolver& resolver);

using Bindings = std::map<VarId, double>;

/// Floating-point evaluation. Throws UnboundVariable and DomainError.
double eval(const Expr& e, const Bindings& bindings);

/// Constant value of a canonical expression, if it is a constant.
std::optional<Rational> as_constant(const Expr& e);

/// Canonical-form zero test.
bool is_zero(const Expr& e);

struct ZeroTest {
  bool symbolic_zero = false;
  bool probed = false;       // numeric probe ran (expression was evaluable)
  bool probe_flag = false;   // probe disagrees with the symbolic verdict
  double max_probe_value = 0.0;
};

/// Canonical check plus an 8-point numeric probe over [-1,1] for every free
/// variable. The probe never certifies a zero; it only flags disagreement.
ZeroTest zero_test(const Expr& e, std::uint64_t seed = 0x5eed);

/// Variables occurring in e.
std::vector<VarId> free_vars(const Expr& e);
bool contains_var(const Expr& e, const std::function<bool(const VarId&)>& pred);
bool contains_symbols(const Expr& e);
bool contains_fun(const Expr& e);

struct PrintOptions {
  /// With m == 1 the dependent variable prints as "u", otherwise as "u<j>".
  int m = 1;
};

std::string to_string(const Expr& e, const PrintOptions& opts = {});
std::string to_string(const VarId& v, const PrintOptions& opts = {});
std::string to_string(const Rational& r);

struct ParseOptions {
  /// Accept coefficient symbols "name[i,j,...]" and symbol derivatives
  /// "d(symbol, var, ...)".
  bool allow_symbols = false;
  bool symbols_depend_on_u = false;
};

/// Parses the expression grammar; throws ParseError. The result is simplified.
Expr parse_expr(std::string_view text, const ParseOptions& opts = {});

}  // namespace difactor

template <>
struct std::hash<difactor::Expr> {
  std::size_t operator()(const difactor::Expr& e) const noexcept { return e.hash(); }
};
