#include <cctype>

#include "difactor/errors.hpp"
#include "difactor/expr.hpp"

namespace difactor {

namespace {

class Parser {
 public:
  Parser(std::string_view text, const ParseOptions& opts) : text_(text), opts_(opts) {}

  Expr parse() {
    skip_ws();
    if (at_end()) fail("empty expression");
    Expr e = expr();
    skip_ws();
    if (!at_end()) fail(std::string("unexpected '") + peek() + "'");
    return simplify(e);
  }

 private:
  std::string_view text_;
  const ParseOptions& opts_;
  std::size_t pos_ = 0;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }

  [[noreturn]] void fail_at(std::size_t at, const std::string& msg) const {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(line, col, msg);
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    std::vector<Expr> terms{term()};
    for (;;) {
      if (accept('+')) {
        terms.push_back(term());
      } else if (accept('-')) {
        terms.push_back(-term());
      } else {
        break;
      }
    }
    return Expr::sum(std::move(terms));
  }

  Expr term() {
    Expr acc = unary();
    for (;;) {
      if (accept('*')) {
        acc = acc * unary();
      } else if (accept('/')) {
        skip_ws();
        const std::size_t at = pos_;
        Expr den = unary();
        if (is_zero(den)) fail_at(at, "division by zero");
        acc = acc / den;
      } else {
        break;
      }
    }
    return acc;
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) {
      skip_ws();
      const std::size_t at = pos_;
      const Expr ex = simplify(unary());
      if (!ex.is_const() || ex.const_value().get_den() != 1) fail_at(at, "exponent must be an integer constant");
      const mpz_class& k = ex.const_value().get_num();
      if (!k.fits_slong_p() || abs(k) > 1000) fail_at(at, "exponent out of range");
      const long kv = k.get_si();
      if (kv < 0 && is_zero(base)) fail_at(at, "negative power of zero");
      return Expr::power(base, kv);
    }
    return base;
  }

  std::string identifier() {
    std::string id;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
      id += peek();
      ++pos_;
    }
    return id;
  }

  Expr number() {
    const std::size_t start = pos_;
    std::string digits;
    while (std::isdigit(static_cast<unsigned char>(peek()))) digits += text_[pos_++];
    int frac = 0;
    if (peek() == '.') {
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        digits += text_[pos_++];
        ++frac;
      }
      if (frac == 0) fail_at(start, "malformed decimal literal");
    }
    if (digits.empty()) fail_at(start, "malformed number");
    mpz_class den = 1;
    for (int i = 0; i < frac; ++i) den *= 10;
    Rational q(mpz_class(digits), den);
    q.canonicalize();
    return Expr(q);
  }

  std::optional<VarId> variable(const std::string& id) const {
    if (id.size() == 2 && id[0] == 'x' && id[1] >= '1' && id[1] <= '9') return VarId::x(id[1] - '0');
    if (id == "u") return VarId::u(1);
    if (id.size() == 2 && id[0] == 'u' && id[1] >= '1' && id[1] <= '9') return VarId::u(id[1] - '0');
    return std::nullopt;
  }

  Symbol symbol_ref(std::string name, std::size_t at) {
    if (!opts_.allow_symbols) fail_at(at, "unknown identifier '" + name + "'");
    expect('[');
    Symbol s;
    s.name = std::move(name);
    s.depends_on_u = opts_.symbols_depend_on_u;
    do {
      skip_ws();
      const std::size_t n_at = pos_;
      std::string digits;
      while (std::isdigit(static_cast<unsigned char>(peek()))) digits += text_[pos_++];
      if (digits.empty() || digits.size() > 6) fail_at(n_at, "expected an index");
      s.indices.push_back(std::stoi(digits));
    } while (accept(','));
    expect(']');
    return s;
  }

  Expr primary() {
    skip_ws();
    const std::size_t at = pos_;
    if (at_end()) fail("unexpected end of input");
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("unexpected '") + c + "'");
    std::string id = identifier();
    if (auto v = variable(id)) return Expr::var(*v);
    static const std::pair<const char*, FunKind> funs[] = {
        {"exp", FunKind::Exp}, {"log", FunKind::Log}, {"sin", FunKind::Sin},
        {"cos", FunKind::Cos}, {"sqrt", FunKind::Sqrt}};
    for (const auto& [name, f] : funs) {
      if (id == name) {
        expect('(');
        Expr arg = expr();
        expect(')');
        return Expr::fun(f, arg);
      }
    }
    skip_ws();
    if (opts_.allow_symbols && id == "d" && peek() == '(') {
      ++pos_;
      skip_ws();
      const std::size_t s_at = pos_;
      Symbol s = symbol_ref(identifier(), s_at);
      while (accept(',')) {
        skip_ws();
        const std::size_t v_at = pos_;
        auto v = variable(identifier());
        if (!v) fail_at(v_at, "expected a variable");
        if (v->is_dependent() && !s.depends_on_u) fail_at(v_at, "symbol does not depend on u");
        s.derivs.push_back(*v);
      }
      expect(')');
      return Expr::symbol(s);
    }
    if (peek() == '[') return Expr::symbol(symbol_ref(std::move(id), at));
    fail_at(at, "unknown identifier '" + id + "'");
  }
};

}  // namespace

Expr parse_expr(std::string_view text, const ParseOptions& opts) {
  return Parser(text, opts).parse();
}

}  // namespace difactor
