#include "difactor/problem.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "difactor/errors.hpp"

namespace difactor {

namespace {

struct Entry {
  std::string section;
  std::string key;
  std::string value;
  std::size_t line = 0;
  std::size_t column = 0;  // of the first value character
};

const std::set<std::string> kSections = {"problem", "operator", "Q1", "Q2", "N1", "N2", "solve"};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<Entry> read_ini(std::string_view text) {
  std::vector<Entry> out;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::size_t indent = raw.find_first_not_of(" \t");
    if (line[0] == '[') {
      if (line.back() != ']') throw ParseError(line_no, indent + 1, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!kSections.count(section)) throw ValidationError("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, indent + 1, "expected 'key = value'");
    if (section.empty()) throw ParseError(line_no, indent + 1, "key outside of a section");
    Entry e;
    e.section = section;
    e.key = std::string(trim(raw.substr(0, eq)));
    e.line = line_no;
    if (e.key.empty()) throw ParseError(line_no, indent + 1, "empty key");
    std::size_t vstart = raw.find_first_not_of(" \t", eq + 1);
    if (vstart == std::string_view::npos) throw ParseError(line_no, eq + 2, "missing value");
    if (raw[vstart] == '"') {
      const auto close = raw.find('"', vstart + 1);
      if (close == std::string_view::npos) throw ParseError(line_no, vstart + 1, "unterminated string");
      const std::string_view rest = trim(raw.substr(close + 1));
      if (!rest.empty() && rest[0] != '#' && rest[0] != ';') {
        throw ParseError(line_no, close + 2, "unexpected text after value");
      }
      e.value = std::string(raw.substr(vstart + 1, close - vstart - 1));
      e.column = vstart + 2;
    } else {
      std::string_view v = raw.substr(vstart);
      const auto comment = v.find_first_of("#;");
      if (comment != std::string_view::npos) v = v.substr(0, comment);
      e.value = std::string(trim(v));
      e.column = vstart + 1;
    }
    out.push_back(std::move(e));
  }
  return out;
}

[[noreturn]] void invalid(const Entry& e, const std::string& msg) {
  throw ValidationError("line " + std::to_string(e.line) + ": " + msg);
}

/// "name[i,j,...]" -> indices; nullopt when the name differs or the shape is off.
std::optional<std::vector<int>> key_indices(const Entry& e, std::string_view name, std::size_t count) {
  std::string key;
  for (char c : e.key) {
    if (c != ' ' && c != '\t') key += c;
  }
  if (key.size() < name.size() + 2 || key.compare(0, name.size(), name) != 0 || key[name.size()] != '[' ||
      key.back() != ']') {
    return std::nullopt;
  }
  std::vector<int> idx;
  const std::string body = key.substr(name.size() + 1, key.size() - name.size() - 2);
  std::size_t p = 0;
  while (p <= body.size()) {
    auto comma = body.find(',', p);
    if (comma == std::string::npos) comma = body.size();
    int v = 0;
    const char* b = body.data() + p;
    const char* end = body.data() + comma;
    auto [ptr, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || ptr != end || b == end) invalid(e, "malformed index in '" + e.key + "'");
    idx.push_back(v);
    p = comma + 1;
  }
  if (idx.size() != count) {
    invalid(e, "'" + e.key + "' needs " + std::to_string(count) + " indices");
  }
  return idx;
}

Expr parse_value(const Entry& e) {
  try {
    return parse_expr(e.value);
  } catch (const ParseError& pe) {
    throw ParseError(e.line, e.column + pe.column() - 1, pe.message());
  }
}

int parse_int(const Entry& e) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size()) invalid(e, "'" + e.key + "' must be an integer");
  return v;
}

double parse_double(const Entry& e, std::string_view text) {
  const std::string s(trim(text));
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    invalid(e, "'" + s + "' is not a number");
  }
  if (used != s.size()) invalid(e, "'" + s + "' is not a number");
  return v;
}

/// Sets a coefficient; index and linearity violations become ValidationError.
void set_checked(DiffOperator& op, int k, int h, const Expr& c, const Entry& e, int max_order) {
  if (k < 0 || k > max_order) invalid(e, "order " + std::to_string(k) + " in '" + e.key + "' exceeds " + std::to_string(max_order));
  if (h < 1 || static_cast<std::uint64_t>(h) > slot_count(op.n(), k)) {
    invalid(e, "slot " + std::to_string(h) + " in '" + e.key + "' outside 1.." + std::to_string(slot_count(op.n(), k)));
  }
  if (!is_zero(op.coeff(k, h))) invalid(e, "duplicate key '" + e.key + "'");
  try {
    op.set(k, h, c);
  } catch (const Error& ex) {
    // Drop the error name prefix; the rethrow carries its own.
    const std::string w = ex.what();
    const auto colon = w.find(": ");
    invalid(e, colon == std::string::npos ? w : w.substr(colon + 2));
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// lead >= 0 forces an explicit zero at (lead,1) when the operator has no
// coefficient of that order, since leading coefficients must be present.
void print_operator(std::ostringstream& os, const DiffOperator& op, const std::string& name, const std::string& prefix,
                    int m, int lead = -1) {
  if (lead >= 0 && op.order() < lead) os << name << "[" << prefix << lead << ",1] = \"0\"\n";
  std::vector<std::pair<DerivIndex, Expr>> items(op.coeffs().begin(), op.coeffs().end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.first.order != b.first.order) return a.first.order > b.first.order;
    return a.first.slot < b.first.slot;
  });
  for (const auto& [d, c] : items) {
    os << name << "[" << prefix << d.order << "," << d.slot << "] = \"" << to_string(c, PrintOptions{m}) << "\"\n";
  }
}

bool same_matrix(const MatrixOperator& a, const MatrixOperator& b) {
  if (a.m() != b.m() || a.n() != b.n()) return false;
  for (int p = 1; p <= a.m(); ++p) {
    for (int q = 1; q <= a.m(); ++q) {
      if (!(a.at(p, q) == b.at(p, q))) return false;
    }
  }
  return true;
}

}  // namespace

bool operator==(const ProblemFile& a, const ProblemFile& b) {
  if (a.kind != b.kind || a.n != b.n || a.m != b.m || !(a.solve == b.solve)) return false;
  if (a.scalar.has_value() != b.scalar.has_value() || (a.scalar && !(*a.scalar == *b.scalar))) return false;
  if (a.matrix.has_value() != b.matrix.has_value() || (a.matrix && !same_matrix(*a.matrix, *b.matrix))) return false;
  if (a.candidate.has_value() != b.candidate.has_value()) return false;
  if (!a.candidate) return true;
  const auto& ca = *a.candidate;
  const auto& cb = *b.candidate;
  if (ca.factors.size() != cb.factors.size() || ca.matrix_factors.size() != cb.matrix_factors.size()) return false;
  for (std::size_t i = 0; i < ca.factors.size(); ++i) {
    if (!(ca.factors[i] == cb.factors[i])) return false;
  }
  for (std::size_t i = 0; i < ca.matrix_factors.size(); ++i) {
    if (!same_matrix(ca.matrix_factors[i], cb.matrix_factors[i])) return false;
  }
  return true;
}

ProblemFile parse_problem(std::string_view text) {
  const auto entries = read_ini(text);
  ProblemFile pf;
  std::optional<int> n_given;
  std::optional<int> m_given;
  bool have_kind = false;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entries) {
    if (!seen.insert({e.section, e.key}).second) invalid(e, "duplicate key '" + e.key + "'");
    if (e.section != "problem") continue;
    if (e.key == "kind") {
      auto t = parse_template(e.value);
      if (!t) invalid(e, "unknown kind '" + e.value + "'");
      pf.kind = *t;
      have_kind = true;
    } else if (e.key == "n") {
      n_given = parse_int(e);
    } else if (e.key == "m") {
      m_given = parse_int(e);
    } else {
      invalid(e, "unknown key '" + e.key + "' in [problem]");
    }
  }
  if (!have_kind) throw ValidationError("[problem] kind is required");
  pf.n = pf.kind.n();
  if (n_given && *n_given != pf.n) {
    throw ValidationError("kind " + to_string(pf.kind) + " has n = " + std::to_string(pf.n));
  }
  pf.m = m_given.value_or(pf.kind.matrix ? 2 : 1);
  if (!pf.kind.matrix && pf.m != 1) throw ValidationError("kind " + to_string(pf.kind) + " has m = 1");
  if (pf.m < 1 || pf.m > 9) throw ValidationError("m must lie in 1..9");

  const Linearity lin = pf.kind.linearity();
  const bool sys = pf.kind.matrix;
  std::map<std::string, DiffOperator> scalars;
  std::map<std::string, MatrixOperator> matrices;
  std::map<std::string, std::set<int>> leading;  // section -> rows with a leading key
  for (const auto& e : entries) {
    if (e.section == "problem" || e.section == "solve") continue;
    const bool is_op = e.section == "operator";
    const bool is_factor_section = e.section[0] == 'Q' || e.section[0] == 'N';
    if (is_factor_section && (e.section[0] == 'N') != sys) {
      invalid(e, "section [" + e.section + "] is not allowed for kind " + to_string(pf.kind));
    }
    const int max_order = is_op ? 2 : 1;
    const std::string name = is_op ? (sys ? "f" : "g") : (sys ? "a" : "b");
    const auto idx = key_indices(e, name, sys ? 4 : 2);
    if (!idx) invalid(e, "illegal key '" + e.key + "' in [" + e.section + "] for kind " + to_string(pf.kind));
    const Expr c = parse_value(e);
    if (!sys) {
      auto it = scalars.try_emplace(e.section, pf.n, pf.m, lin).first;
      set_checked(it->second, (*idx)[0], (*idx)[1], c, e, max_order);
      if ((*idx)[0] == max_order) leading[e.section].insert(1);
    } else {
      const int p = (*idx)[0];
      const int q = (*idx)[1];
      const int k = (*idx)[2];
      if (p < 1 || p > pf.m || q < 1 || q > pf.m) invalid(e, "component index in '" + e.key + "' outside 1.." + std::to_string(pf.m));
      if (!is_op && p != q && k > 0) invalid(e, "off-diagonal factor entries must have order 0");
      auto it = matrices.try_emplace(e.section, pf.n, pf.m, lin).first;
      set_checked(it->second.at(p, q), k, (*idx)[3], c, e, max_order);
      if (p == q && k == max_order) leading[e.section].insert(p);
    }
  }

  auto require_leading = [&](const std::string& section, const std::string& what) {
    const int rows = sys ? pf.m : 1;
    for (int p = 1; p <= rows; ++p) {
      if (!leading[section].count(p)) {
        throw ValidationError("leading coefficient " + what + (sys ? " of row " + std::to_string(p) : "") +
                              " missing in [" + section + "]");
      }
    }
  };
  if (!scalars.count("operator") && !matrices.count("operator")) throw ValidationError("[operator] is required");
  require_leading("operator", sys ? "f[p,p,2,h]" : "g[2,h]");
  if (sys) {
    pf.matrix = matrices.at("operator");
  } else {
    pf.scalar = scalars.at("operator");
  }
  const std::string f1 = sys ? "N1" : "Q1";
  const std::string f2 = sys ? "N2" : "Q2";
  const bool has1 = scalars.count(f1) || matrices.count(f1);
  const bool has2 = scalars.count(f2) || matrices.count(f2);
  if (has1 != has2) throw ValidationError("[" + f1 + "] and [" + f2 + "] must be given together");
  if (has1) {
    require_leading(f1, sys ? "a[p,p,1,h]" : "b[1,h]");
    require_leading(f2, sys ? "a[p,p,1,h]" : "b[1,h]");
    Candidate c;
    if (sys) {
      c.matrix_factors = {matrices.at(f1), matrices.at(f2)};
    } else {
      c.factors = {scalars.at(f1), scalars.at(f2)};
    }
    pf.candidate = std::move(c);
  }

  for (const auto& e : entries) {
    if (e.section != "solve") continue;
    if (e.key == "interval") {
      const auto comma = e.value.find(',');
      if (comma == std::string::npos) invalid(e, "interval must be 'a,b'");
      const double a = parse_double(e, std::string_view(e.value).substr(0, comma));
      const double b = parse_double(e, std::string_view(e.value).substr(comma + 1));
      if (!(a < b)) invalid(e, "interval needs a < b");
      pf.solve.interval = std::make_pair(a, b);
    } else if (e.key == "steps") {
      pf.solve.steps = parse_int(e);
      if (*pf.solve.steps < 1) invalid(e, "steps must be positive");
    } else if (e.key == "C") {
      const auto c = as_constant(parse_value(e));
      if (!c) invalid(e, "C must be a rational constant");
      pf.solve.C = *c;
    } else {
      invalid(e, "unknown key '" + e.key + "' in [solve]");
    }
  }
  return pf;
}

std::string print_problem(const ProblemFile& p) {
  std::ostringstream os;
  os << "[problem]\nkind = " << to_string(p.kind) << "\nn = " << p.n << "\nm = " << p.m << "\n";
  auto matrix_section = [&](const std::string& section, const std::string& name, const MatrixOperator& op, int lead) {
    os << "\n[" << section << "]\n";
    for (int r = 1; r <= op.m(); ++r) {
      for (int q = 1; q <= op.m(); ++q) {
        print_operator(os, op.at(r, q), name, std::to_string(r) + "," + std::to_string(q) + ",", p.m, r == q ? lead : -1);
      }
    }
  };
  if (p.scalar) {
    os << "\n[operator]\n";
    print_operator(os, *p.scalar, "g", "", p.m, 2);
  }
  if (p.matrix) matrix_section("operator", "f", *p.matrix, 2);
  if (p.candidate) {
    if (p.candidate->is_matrix()) {
      matrix_section("N1", "a", p.candidate->matrix_factors[0], 1);
      matrix_section("N2", "a", p.candidate->matrix_factors[1], 1);
    } else {
      os << "\n[Q1]\n";
      print_operator(os, p.candidate->factors[0], "b", "", p.m, 1);
      os << "\n[Q2]\n";
      print_operator(os, p.candidate->factors[1], "b", "", p.m, 1);
    }
  }
  const auto& s = p.solve;
  if (s.interval || s.steps || s.C) {
    os << "\n[solve]\n";
    if (s.interval) os << "interval = \"" << format_double(s.interval->first) << "," << format_double(s.interval->second) << "\"\n";
    if (s.steps) os << "steps = " << *s.steps << "\n";
    if (s.C) os << "C = \"" << to_string(*s.C) << "\"\n";
  }
  return os.str();
}

}  // namespace difactor
