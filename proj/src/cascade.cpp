#include "difactor/cascade.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "difactor/errors.hpp"
#include "difactor/poly.hpp"

namespace difactor {

namespace {

const VarId kX = VarId::x(1);

bool depends_on_x(const Expr& e) {
  return contains_symbols(e) || contains_var(e, [](const VarId& v) { return v == kX; });
}

/// Slope of an argument linear in x1; nullopt otherwise.
std::optional<Expr> linear_slope(const Expr& arg) {
  const Expr s = diff(arg, kX);
  if (is_zero(s) || depends_on_x(s)) return std::nullopt;
  return s;
}

/// x^k exp(L) with L = s x + c: e^L sum_j (-1)^j k!/(k-j)! x^(k-j) / s^(j+1).
Expr integrate_power_exp(long k, const Expr& e, const Expr& s) {
  std::vector<Expr> terms;
  Rational falling = 1;
  Expr s_pow = s;
  for (long j = 0; j <= k; ++j) {
    const Rational sign = (j % 2 == 0) ? 1 : -1;
    terms.push_back(Expr(sign * falling) * Expr::power(Expr::x(1), k - j) / s_pow);
    falling *= (k - j);
    s_pow = s_pow * s;
  }
  return Expr::sum(terms) * e;
}

std::optional<Expr> integrate_term(const Monomial& mono, const Rational& c) {
  Expr coeff = Expr(c);
  long xk = 0;
  std::vector<std::pair<Expr, long>> rest;
  for (const auto& [atom, k] : mono) {
    if (atom.kind() == NodeKind::Var && atom.var_id() == kX) {
      xk = k;
    } else if (!depends_on_x(atom)) {
      coeff = coeff * Expr::power(atom, k);
    } else {
      rest.emplace_back(atom, k);
    }
  }
  const Expr x = Expr::x(1);
  if (rest.empty()) {
    if (xk == -1) return coeff * Expr::fun(FunKind::Log, x);
    return coeff * Expr::power(x, xk + 1) / Expr(xk + 1);
  }
  if (rest.size() != 1 || (rest[0].second != 1 && !(rest[0].second == -1 && xk == 0))) return std::nullopt;
  const auto& [atom, k] = rest[0];
  if (k == -1) {
    // 1/L with L linear: a kernel atom.
    if (atom.kind() != NodeKind::Sum) return std::nullopt;
    const auto s = linear_slope(atom);
    if (!s) return std::nullopt;
    return coeff * Expr::fun(FunKind::Log, atom) / *s;
  }
  if (atom.kind() != NodeKind::Fun || xk < 0) return std::nullopt;
  const auto s = linear_slope(atom.args()[0]);
  if (!s) return std::nullopt;
  switch (atom.fun_kind()) {
    case FunKind::Exp:
      return coeff * integrate_power_exp(xk, atom, *s);
    case FunKind::Sin:
      if (xk != 0) return std::nullopt;
      return -coeff * Expr::fun(FunKind::Cos, atom.args()[0]) / *s;
    case FunKind::Cos:
      if (xk != 0) return std::nullopt;
      return coeff * Expr::fun(FunKind::Sin, atom.args()[0]) / *s;
    default:
      return std::nullopt;
  }
}

double eval_x(const Expr& e, double x) { return eval(e, Bindings{{kX, x}}); }

using Fn = std::function<double(double)>;

double integrate(const Fn& f, double a, double b) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 15, 1e-13, &err);
  if (!std::isfinite(v) || err > 1e-8 * std::max(1.0, std::abs(v))) {
    throw QuadratureFailure("integral over [" + std::to_string(a) + ", " + std::to_string(b) +
                            "] did not converge (error estimate " + std::to_string(err) + ")");
  }
  return v;
}

/// A cascade function, closed form when available.
struct Solution {
  std::optional<Expr> closed;
  Fn fn;

  static Solution of(const Expr& e) {
    return Solution{e, [e](double x) { return eval_x(e, x); }};
  }
};

// A sign change between neighbouring grid points means a zero in between.
void check_leading(const Expr& lead, const std::vector<double>& xs, const std::string& what) {
  double prev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    double v = 0.0;
    try {
      v = eval_x(lead, x);
    } catch (const DomainError&) {
      throw SingularLeadingCoefficient(what + " is undefined at x1 = " + std::to_string(x));
    }
    if (v == 0.0) throw SingularLeadingCoefficient(what + " vanishes at x1 = " + std::to_string(x));
    if (i > 0 && (v > 0.0) != (prev > 0.0))
      throw SingularLeadingCoefficient(what + " changes sign between x1 = " + std::to_string(xs[i - 1]) +
                                       " and x1 = " + std::to_string(x));
    prev = v;
  }
}

/// Solution of lead w' + zeroth w = 0 with w(mid) = 1.
Solution homogeneous(const Expr& lead, const Expr& zeroth, double mid) {
  const Expr r = simplify(zeroth / lead);
  if (auto F = antiderivative(r)) {
    const Expr at_mid = substitute(*F, {{kX, Expr(Rational(mid))}});
    return Solution::of(simplify(Expr::fun(FunKind::Exp, at_mid - *F)));
  }
  return Solution{std::nullopt, [r, mid](double x) {
                    return std::exp(-integrate([&](double t) { return eval_x(r, t); }, mid, x));
                  }};
}

/// Solution of lead w' + zeroth w = f as w = h * int f / (lead h), with h
/// the homogeneous solution; the table antiderivative carries no constant,
/// the quadrature one starts at mid.
Solution inhomogeneous(const Expr& lead, const Solution& h, const Solution& f, double mid) {
  if (h.closed && f.closed) {
    const Expr integrand = simplify(*f.closed / (lead * *h.closed));
    if (auto G = antiderivative(integrand)) return Solution::of(simplify(*h.closed * *G));
  }
  const Fn hf = h.fn;
  const Fn ff = f.fn;
  return Solution{std::nullopt, [lead, hf, ff, mid](double x) {
                    const double i = integrate([&](double t) { return ff(t) / (eval_x(lead, t) * hf(t)); }, mid, x);
                    return hf(x) * i;
                  }};
}

ResidualReport from_terms(const std::vector<Expr>& terms, const std::vector<Bindings>& points) {
  ResidualReport rep;
  rep.symbolic = simplify(Expr::sum(terms));
  rep.symbolic_zero = is_zero(*rep.symbolic);
  for (const auto& b : points) {
    double total = 0.0;
    double scale = 1.0;
    try {
      for (const Expr& t : terms) {
        const double v = eval(t, b);
        total += v;
        scale = std::max(scale, std::abs(v));
      }
    } catch (const DomainError&) {
      ++rep.undefined_points;
      continue;
    }
    if (rep.symbolic_zero) total = 0.0;
    const auto xi = b.find(kX);
    rep.points.push_back(xi == b.end() ? 0.0 : xi->second);
    rep.values.push_back(std::abs(total));
    rep.max_abs = std::max(rep.max_abs, std::abs(total));
    rep.max_relative = std::max(rep.max_relative, std::abs(total) / scale);
  }
  return rep;
}

Trajectory sample(const Fn& f, const std::vector<double>& xs) {
  Trajectory t;
  t.x = xs;
  t.values.emplace_back();
  for (double x : xs) {
    try {
      t.values[0].push_back(f(x));
    } catch (const DomainError&) {
      t.values[0].push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  return t;
}

DiffOperator product_operator(const Candidate& c) {
  auto op = to_operator(expand_product(c.factors), Linearity::Linear);
  if (!op) throw UnsupportedTemplate("product of the candidate is not linear");
  return *op;
}

CascadeEntry make_entry(const std::string& name, const Solution& s, const DiffOperator& against,
                        const std::vector<double>& xs) {
  CascadeEntry e;
  e.name = name;
  e.closed_form = s.closed;
  e.source = s.closed ? SolutionSource::ClosedForm : SolutionSource::Quadrature;
  e.columns.push_back(sample(s.fn, xs));
  e.residual = s.closed ? verify_solution(against, *s.closed, ode_points(xs)) : verify_solution(against, s.fn, xs);
  return e;
}

/// u0 of lead u' + (p(x) + q(x) u) u = 0 via w = 1/u:
/// w' - p w = q, w = e^P (int q e^-P + C q(mid)), P(mid) = 0.
Expr bernoulli(const Expr& lead, const Expr& zeroth, double mid, const Rational& C) {
  const Expr r = simplify(zeroth / lead);
  const auto by_u = SparsePoly::from_expr(r).coefficients_in(Expr::u(1));
  if (!by_u || by_u->empty() || by_u->rbegin()->first > 1) {
    throw UnsupportedTemplate("Q2 is not of Bernoulli shape b[2,1,1] D + p(x) + q(x) u");
  }
  auto coeff = [&](long k) {
    auto it = by_u->find(k);
    return it == by_u->end() ? Expr(0) : it->second.to_expr();
  };
  const Expr p = coeff(0);
  const Expr q = coeff(1);
  const Expr m = Expr(Rational(mid));
  for (const Expr* e : {&p, &q}) {
    if (contains_var(*e, [](const VarId& v) { return !v.is_independent(); })) {
      throw UnsupportedTemplate("Q2 is not of Bernoulli shape b[2,1,1] D + p(x) + q(x) u");
    }
  }
  auto P = antiderivative(p);
  if (!P) throw UnsupportedTemplate("no closed-form antiderivative of " + to_string(p));
  const Expr Pn = simplify(*P - substitute(*P, {{kX, m}}));
  const Expr integrand = simplify(q * Expr::fun(FunKind::Exp, -Pn));
  auto G = antiderivative(integrand);
  if (!G) throw UnsupportedTemplate("no closed-form antiderivative of " + to_string(integrand));
  Expr K = simplify(Expr(C) * substitute(q, {{kX, m}}));
  if (is_zero(K)) K = Expr(C);
  const Expr w = Expr::fun(FunKind::Exp, Pn) * (*G + K);
  return simplify(Expr(1) / w);
}

// ---------------------------------------------------------------------------
// Systems

struct FirstOrderSystem {
  int m = 1;
  std::vector<Expr> lead;                 // diagonal leading coefficients
  std::vector<std::vector<Expr>> zeroth;  // [p][q]

  static FirstOrderSystem from(const MatrixOperator& op) {
    if (op.n() != 1) throw UnsupportedTemplate("system cascade needs one independent variable");
    if (op.linearity() != Linearity::Linear) throw UnsupportedTemplate("system cascade needs linear factors");
    if (!op.is_factor_shaped()) throw UnsupportedTemplate("factor is not first-order with a diagonal principal part");
    FirstOrderSystem s;
    s.m = op.m();
    for (int p = 1; p <= s.m; ++p) {
      s.lead.push_back(op.at(p, p).coeff(1, 1));
      s.zeroth.emplace_back();
      for (int q = 1; q <= s.m; ++q) s.zeroth.back().push_back(op.at(p, q).coeff(0, 1));
    }
    return s;
  }

  /// rhs[p] = (f[p] - sum_q zeroth[p][q] u[q]) / lead[p].
  std::vector<double> rhs(double x, const std::vector<double>& u, const std::vector<double>* f) const {
    std::vector<double> out(m);
    for (int p = 0; p < m; ++p) {
      double acc = f ? (*f)[p] : 0.0;
      for (int q = 0; q < m; ++q) acc -= eval_x(zeroth[p][q], x) * u[q];
      out[p] = acc / eval_x(lead[p], x);
    }
    return out;
  }
};

std::vector<double> axpy(const std::vector<double>& a, double s, const std::vector<double>& b) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * b[i];
  return out;
}

using Rhs = std::function<std::vector<double>(double, const std::vector<double>&)>;

std::vector<std::vector<double>> rk4(const Rhs& f, std::vector<double> y, double a, double b, int steps) {
  const double h = (b - a) / steps;
  std::vector<std::vector<double>> out{y};
  for (int i = 0; i < steps; ++i) {
    const double x = a + i * h;
    const auto k1 = f(x, y);
    const auto k2 = f(x + h / 2, axpy(y, h / 2, k1));
    const auto k3 = f(x + h / 2, axpy(y, h / 2, k2));
    const auto k4 = f(x + h, axpy(y, h, k3));
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
    out.push_back(y);
  }
  return out;
}

/// Coefficient expressions of an m x m grid of linear ODE operators.
struct CoefficientGrid {
  int m = 1;
  int order = 0;
  std::vector<std::vector<std::vector<Expr>>> c;  // [p][q][k]

  static CoefficientGrid from(const JetGrid& g) {
    CoefficientGrid out;
    out.m = static_cast<int>(g.size());
    for (const auto& row : g) {
      out.c.emplace_back();
      for (const auto& cell : row) {
        auto op = to_operator(cell, Linearity::Linear);
        if (!op) throw UnsupportedTemplate("system product is not linear");
        std::vector<Expr> ks(3, Expr(0));
        for (const auto& [d, e] : op->coeffs()) {
          if (d.order > 2) throw UnsupportedTemplate("system product exceeds second order");
          ks[d.order] = e;
          out.order = std::max(out.order, d.order);
        }
        out.c.back().push_back(ks);
      }
    }
    return out;
  }

  static CoefficientGrid from(const MatrixOperator& op) {
    CoefficientGrid out;
    out.m = op.m();
    for (int p = 1; p <= op.m(); ++p) {
      out.c.emplace_back();
      for (int q = 1; q <= op.m(); ++q) {
        std::vector<Expr> ks(3, Expr(0));
        for (const auto& [d, e] : op.at(p, q).coeffs()) {
          ks[d.order] = e;
          out.order = std::max(out.order, d.order);
        }
        out.c.back().push_back(ks);
      }
    }
    return out;
  }
};

/// Max relative central-difference residual over interior nodes.
ResidualReport trajectory_residual(const CoefficientGrid& g, const std::vector<Trajectory>& cols) {
  ResidualReport rep;
  if (cols.empty()) return rep;
  const auto& xs = cols[0].x;
  const std::size_t n = xs.size();
  const double h = xs[1] - xs[0];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double x = xs[i];
    double worst = 0.0;
    for (const auto& t : cols) {
      for (int p = 0; p < g.m; ++p) {
        double total = 0.0;
        double scale = 1.0;
        for (int q = 0; q < g.m; ++q) {
          const auto& v = t.values[q];
          const double d[3] = {v[i], (v[i + 1] - v[i - 1]) / (2 * h), (v[i + 1] - 2 * v[i] + v[i - 1]) / (h * h)};
          for (int k = 0; k <= 2; ++k) {
            if (is_zero(g.c[p][q][k])) continue;
            const double term = eval_x(g.c[p][q][k], x) * d[k];
            total += term;
            scale = std::max(scale, std::abs(term));
          }
        }
        rep.max_abs = std::max(rep.max_abs, std::abs(total));
        const double rel = std::abs(total) / scale;
        rep.max_relative = std::max(rep.max_relative, rel);
        worst = std::max(worst, std::abs(total));
      }
    }
    rep.points.push_back(x);
    rep.values.push_back(worst);
  }
  return rep;
}

}  // namespace

std::string to_string(SolutionSource s) {
  switch (s) {
    case SolutionSource::ClosedForm:
      return "closed-form";
    case SolutionSource::Quadrature:
      return "quadrature";
    case SolutionSource::RK4:
      return "rk4";
  }
  return "";
}

std::optional<Expr> antiderivative(const Expr& f) {
  const SparsePoly p = SparsePoly::from_expr(f);
  std::vector<Expr> terms;
  for (const auto& [mono, c] : p.terms()) {
    auto t = integrate_term(mono, c);
    if (!t) return std::nullopt;
    terms.push_back(*t);
  }
  return simplify(Expr::sum(terms));
}

std::vector<double> grid(double a, double b, int points) {
  std::vector<double> xs;
  if (points == 1) return {a};
  for (int i = 0; i < points; ++i) xs.push_back(a + (b - a) * i / (points - 1));
  return xs;
}

std::vector<Bindings> ode_points(const std::vector<double>& xs) {
  std::vector<Bindings> out;
  for (double x : xs) out.push_back(Bindings{{kX, x}});
  return out;
}

ResidualReport verify_solution(const DiffOperator& p, const Expr& u, const std::vector<Bindings>& points) {
  std::vector<Expr> terms;
  for (const auto& [d, c] : p.coeffs()) {
    DiffOperator single(p.n(), p.m(), p.linearity());
    single.set(d, c);
    terms.push_back(difactor::apply(single, 1, {u}));
  }
  return from_terms(terms, points);
}

ResidualReport verify_solution(const JetPolynomial& p, const Expr& u, const std::vector<Bindings>& points) {
  std::vector<Expr> terms;
  for (const auto& [mono, c] : p.terms()) {
    Expr m = c;
    for (const auto& [v, k] : mono) m = m * Expr::power(Expr::var(v), k);
    terms.push_back(instantiate(simplify(m), {u}, p.n()));
  }
  return from_terms(terms, points);
}

ResidualReport verify_solution(const DiffOperator& p, const std::function<double(double)>& u,
                               const std::vector<double>& points) {
  if (p.n() != 1) throw InvalidIndex("numeric verification needs one independent variable");
  ResidualReport rep;
  for (double x : points) {
    // Five-point stencils: truncation O(h^4), roundoff O(eps / h^2).
    const double h = 1e-3 * std::max(1.0, std::abs(x));
    const double f[5] = {u(x - 2 * h), u(x - h), u(x), u(x + h), u(x + 2 * h)};
    const double d[3] = {f[2], (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h),
                         (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h)};
    double total = 0.0;
    double scale = 1.0;
    for (const auto& [di, c] : p.coeffs()) {
      if (di.order > 2) throw UnsupportedTemplate("numeric verification supports order <= 2");
      const double t = eval_x(c, x) * d[di.order];
      total += t;
      scale = std::max(scale, std::abs(t));
    }
    rep.points.push_back(x);
    rep.values.push_back(std::abs(total));
    rep.max_abs = std::max(rep.max_abs, std::abs(total));
    rep.max_relative = std::max(rep.max_relative, std::abs(total) / scale);
  }
  return rep;
}

CascadeSolution cascade_ode(const Candidate& cand, const CascadeOptions& opts) {
  if (cand.is_matrix() || cand.factors.size() != 2) throw UnsupportedTemplate("scalar two-factor candidate expected");
  const DiffOperator& q1 = cand.factors[0];
  const DiffOperator& q2 = cand.factors[1];
  if (q1.n() != 1 || q2.n() != 1) throw UnsupportedTemplate("ODE cascade needs one independent variable");
  if (q1.order() > 1 || q2.order() > 1) throw UnsupportedTemplate("factors must be first order");
  const auto [a, b] = opts.interval;
  const double mid = (a + b) / 2;
  const auto xs = grid(a, b, opts.residual_points);

  CascadeSolution out;
  out.interval = opts.interval;
  const Expr b211 = q2.coeff(1, 1);
  check_leading(b211, xs, "b[2,1,1]");

  if (q1.linearity() == Linearity::QuasiLinear || q2.linearity() == Linearity::QuasiLinear) {
    const Expr u0 = bernoulli(b211, q2.coeff(0, 1), mid, opts.C);
    const JetPolynomial p = expand_product(cand.factors);
    CascadeEntry e;
    e.name = "u0";
    e.closed_form = u0;
    e.columns.push_back(sample([&](double x) { return eval_x(u0, x); }, xs));
    e.residual = verify_solution(p, u0, ode_points(xs));
    out.entries.push_back(std::move(e));
    return out;
  }

  const Expr b111 = q1.coeff(1, 1);
  check_leading(b111, xs, "b[1,1,1]");
  const DiffOperator p = product_operator(cand);
  const Solution u0 = homogeneous(b211, q2.coeff(0, 1), mid);
  const Solution v1 = homogeneous(b111, q1.coeff(0, 1), mid);
  const Solution u1 = inhomogeneous(b211, u0, v1, mid);
  out.entries.push_back(make_entry("u0", u0, p, xs));
  out.entries.push_back(make_entry("v1", v1, q1, xs));
  out.entries.push_back(make_entry("u1", u1, p, xs));
  return out;
}

CascadeSolution cascade_system_numeric(const Candidate& cand, const CascadeOptions& opts) {
  if (!cand.is_matrix() || cand.matrix_factors.size() != 2) {
    throw UnsupportedTemplate("matrix two-factor candidate expected");
  }
  if (opts.steps < 4) throw StepCountTooSmall("at least 4 steps are needed, got " + std::to_string(opts.steps));
  const MatrixOperator& n1 = cand.matrix_factors[0];
  const MatrixOperator& n2 = cand.matrix_factors[1];
  const FirstOrderSystem s1 = FirstOrderSystem::from(n1);
  const FirstOrderSystem s2 = FirstOrderSystem::from(n2);
  if (s1.m != s2.m) throw ShapeMismatch("factors have different sizes");
  const int m = s1.m;
  const auto [a, b] = opts.interval;
  const auto xs = grid(a, b, opts.steps + 1);
  for (int p = 0; p < m; ++p) {
    check_leading(s1.lead[p], xs, "a[1," + std::to_string(p + 1) + "," + std::to_string(p + 1) + ",1,1]");
    check_leading(s2.lead[p], xs, "a[2," + std::to_string(p + 1) + "," + std::to_string(p + 1) + ",1,1]");
  }

  const CoefficientGrid product = CoefficientGrid::from(matrix_expand_product({n1, n2}));
  const CoefficientGrid first = CoefficientGrid::from(n1);

  CascadeSolution out;
  out.interval = opts.interval;
  CascadeEntry u0{"u0", SolutionSource::RK4, std::nullopt, {}, {}};
  CascadeEntry v1{"v1", SolutionSource::RK4, std::nullopt, {}, {}};
  CascadeEntry u1{"u1", SolutionSource::RK4, std::nullopt, {}, {}};

  auto to_traj = [&](const std::vector<std::vector<double>>& states, int offset) {
    Trajectory t;
    t.x = xs;
    t.values.assign(m, {});
    for (const auto& st : states) {
      for (int c = 0; c < m; ++c) t.values[c].push_back(st[offset + c]);
    }
    return t;
  };

  for (int col = 0; col < m; ++col) {
    std::vector<double> e(m, 0.0);
    e[col] = 1.0;
    const auto hom = rk4([&](double x, const std::vector<double>& y) { return s2.rhs(x, y, nullptr); }, e, a, b,
                         opts.steps);
    u0.columns.push_back(to_traj(hom, 0));

    // Joint state (v1, u1): v1' from N1, u1' from N2 forced by v1; u1(a) = 0.
    std::vector<double> y0(2 * m, 0.0);
    y0[col] = 1.0;
    const auto joint = rk4(
        [&](double x, const std::vector<double>& y) {
          const std::vector<double> v(y.begin(), y.begin() + m);
          const std::vector<double> u(y.begin() + m, y.end());
          auto dv = s1.rhs(x, v, nullptr);
          const auto du = s2.rhs(x, u, &v);
          dv.insert(dv.end(), du.begin(), du.end());
          return dv;
        },
        y0, a, b, opts.steps);
    v1.columns.push_back(to_traj(joint, 0));
    u1.columns.push_back(to_traj(joint, m));
  }
  u0.residual = trajectory_residual(product, u0.columns);
  v1.residual = trajectory_residual(first, v1.columns);
  u1.residual = trajectory_residual(product, u1.columns);
  out.entries = {std::move(u0), std::move(v1), std::move(u1)};
  return out;
}

}  // namespace difactor
