#include <gtest/gtest.h>

#include <cmath>

#include "difactor/errors.hpp"
#include "difactor/operator.hpp"
#include "support.hpp"

namespace difactor {
namespace {

using testing::ode_factor;

Expr P(const char* s, bool u = false) { return parse_expr(s, ParseOptions{false, u}); }

TEST(Operator, ApplyExamples) {
  DiffOperator d2(1);
  d2.set(2, 1, 1);
  EXPECT_EQ(simplify(apply(d2, 1, {P("x1^3")})), simplify(P("6*x1")));

  DiffOperator q(1, 1, Linearity::QuasiLinear);
  q.set(1, 1, Expr::u(1));
  EXPECT_EQ(simplify(apply(q, 1, {P("x1^2")})), simplify(P("2*x1^3")));

  DiffOperator id(2);
  id.set(0, 1, 1);
  const Expr u = P("x1^2*x2 + exp(x2)");
  EXPECT_EQ(simplify(apply(id, 1, {u})), simplify(u));
}

TEST(Operator, LinearityClassIsEnforced) {
  DiffOperator lin(1);
  EXPECT_THROW(lin.set(1, 1, Expr::u(1)), ValidationError);
  DiffOperator ql(1, 1, Linearity::QuasiLinear);
  EXPECT_THROW(ql.set(1, 1, Expr::var(VarId::jet(1, DerivIndex::make(1, 1, 1)))), ValidationError);
  EXPECT_THROW(lin.set(1, 2, 1), InvalidIndex);
}

TEST(Operator, ConstantFactors) {
  const auto e = expand_product({ode_factor(1, -1), ode_factor(1, -2)});
  EXPECT_EQ(to_string(e), "u_{(2,1)} - 3*u_{(1,1)} + 2*u");
}

TEST(Operator, ConstantFactorsAgainstSequentialApplication) {
  // Generic degree-4 polynomial u: coefficients of P u match term by term.
  const Expr u = P("2 - x1 + 3*x1^2 + x1^3/2 - x1^4");
  const Expr seq = apply(ode_factor(1, -1), 1, {apply(ode_factor(1, -2), 1, {u})});
  const Expr direct = simplify(diff(diff(u, VarId::x(1)), VarId::x(1)) - 3 * diff(u, VarId::x(1)) + 2 * u);
  EXPECT_EQ(simplify(seq), direct);
}

TEST(Operator, QuasiLinearProduct) {
  const auto e = expand_product({ode_factor(1, 0, Linearity::QuasiLinear),
                                 ode_factor(1, P("u/2", true), Linearity::QuasiLinear)});
  EXPECT_EQ(to_string(e), "u_{(2,1)} + u*u_{(1,1)}");
}

TEST(Operator, SymbolicFirstOrderCoefficient) {
  ParseOptions po;
  po.allow_symbols = true;
  DiffOperator q1(1), q2(1);
  q1.set(1, 1, parse_expr("b[1,1,1]", po));
  q1.set(0, 1, parse_expr("b[1,0,1]", po));
  q2.set(1, 1, parse_expr("b[2,1,1]", po));
  q2.set(0, 1, parse_expr("b[2,0,1]", po));
  const auto e = expand_product({q1, q2});
  const Expr expected = parse_expr("b[1,0,1]*b[2,1,1] + b[1,1,1]*b[2,0,1] + b[1,1,1]*d(b[2,1,1],x1)", po);
  EXPECT_EQ(e.coeff(jet_monomial(1, DerivIndex::make(1, 1, 1))), simplify(expected));
}

TEST(Operator, SchwarzGrouping) {
  DiffOperator op(2);
  op.set(2, 2, 3);
  op.set(2, 3, P("x1"));
  const auto p = to_jet(op);
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.coeff(jet_monomial(1, DerivIndex::make(2, 2, 2))), simplify(P("x1 + 3")));
}

TEST(Operator, CanonicalizeMergesEqualSlots) {
  const Expr a = Expr::var(VarId::jet(1, DerivIndex::make(2, 2, 2)));
  const Expr b = Expr::var(VarId::jet(1, DerivIndex::make(2, 2, 3)));
  const auto p = canonicalize_jet(JetPolynomial::from_expr(3 * a + 5 * b, 2, 1, 1));
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.coeff(jet_monomial(1, DerivIndex::make(2, 2, 2))), Expr(8));

  const auto zero = JetPolynomial::from_expr(simplify(a - a), 2, 1, 1);
  EXPECT_TRUE(zero.is_zero());

  const Expr ux = Expr::var(VarId::jet(1, DerivIndex::make(1, 1, 1)));
  const auto sq = JetPolynomial::from_expr(ux * ux, 1, 1, 1);
  ASSERT_EQ(sq.terms().size(), 1u);
  EXPECT_EQ(sq.terms().begin()->first, (JetMonomial{{VarId::jet(1, DerivIndex::make(1, 1, 1)), 2}}));
}

TEST(Operator, WaveFactors) {
  DiffOperator a(2), b(2);
  a.set(1, 1, 1);
  a.set(1, 2, 1);
  b.set(1, 1, 1);
  b.set(1, 2, -1);
  EXPECT_EQ(to_string(expand_product({a, b})), "u_{(2,1)} - u_{(2,4)}");
}

TEST(Operator, OrderOverflow) {
  std::vector<DiffOperator> fs(7, ode_factor(1, 0));
  EXPECT_THROW(expand_product(fs), OrderOverflow);
  fs.resize(6);
  EXPECT_NO_THROW(expand_product(fs));
}

MatrixOperator constant_matrix(const std::vector<std::vector<std::pair<int, int>>>& cells) {
  const int m = static_cast<int>(cells.size());
  MatrixOperator M(1, m);
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) {
      if (cells[p][q].first != 0) M.at(p + 1, q + 1).set(1, 1, cells[p][q].first);
      if (cells[p][q].second != 0) M.at(p + 1, q + 1).set(0, 1, cells[p][q].second);
    }
  return M;
}

TEST(Operator, MatrixDiagonal) {
  const auto g = matrix_expand_product({constant_matrix({{{1, -1}, {0, 0}}, {{0, 0}, {1, -1}}}),
                                        constant_matrix({{{1, -2}, {0, 0}}, {{0, 0}, {1, 1}}})});
  EXPECT_EQ(to_string(g[0][0], {2}), "u1_{(2,1)} - 3*u1_{(1,1)} + 2*u1");
  EXPECT_TRUE(g[0][1].is_zero());
  EXPECT_TRUE(g[1][0].is_zero());
  EXPECT_EQ(to_string(g[1][1], {2}), "u2_{(2,1)} - u2");
}

TEST(Operator, MatrixCoupled) {
  const auto g = matrix_expand_product({constant_matrix({{{1, 0}, {0, 1}}, {{0, 0}, {1, 0}}}),
                                        constant_matrix({{{1, 0}, {0, 0}}, {{0, 2}, {1, 0}}})});
  EXPECT_EQ(to_string(g[0][0], {2}), "u1_{(2,1)} + 2*u1");
  EXPECT_EQ(to_string(g[0][1], {2}), "u2_{(1,1)}");
  EXPECT_EQ(to_string(g[1][0], {2}), "2*u1_{(1,1)}");
  EXPECT_EQ(to_string(g[1][1], {2}), "u2_{(2,1)}");
}

TEST(Operator, MatrixIdentityFactor) {
  const auto n1 = constant_matrix({{{1, 0}, {0, 1}}, {{0, 0}, {1, 0}}});
  const auto id = constant_matrix({{{0, 1}, {0, 0}}, {{0, 0}, {0, 1}}});
  const auto g = matrix_expand_product({n1, id});
  for (int p = 1; p <= 2; ++p)
    for (int q = 1; q <= 2; ++q) EXPECT_EQ(g[p - 1][q - 1], to_jet(n1.at(p, q), q));
}

TEST(Operator, MatrixShapeMismatch) {
  EXPECT_THROW(matrix_expand_product({MatrixOperator(1, 2), MatrixOperator(1, 3)}), ShapeMismatch);
}

// Random first-order factor with polynomial coefficients, optionally of
// higher order to exercise longer products.
DiffOperator random_factor(Rng& rng, int n, Linearity lin) {
  return testing::random_first_order(rng, n, lin, 2, false);
}

// Left factor acting on v = Q2 u: coefficients see the original u, the
// derivatives act on v.
Expr act(const DiffOperator& q, const Expr& u, const Expr& v) {
  Expr out;
  for (const auto& [d, c] : q.coeffs()) {
    Expr dv = v;
    for (Axis a : index_to_axes(d)) dv = diff(dv, VarId::x(a));
    out += substitute(c, {{VarId::u(1), u}}) * dv;
  }
  return out;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)}); }

TEST(Operator, ExpansionCommutesWithApplication) {
  Rng rng(21);
  for (int n = 1; n <= 2; ++n)
    for (Linearity lin : {Linearity::Linear, Linearity::QuasiLinear})
      for (int trial = 0; trial < 10; ++trial) {
        const DiffOperator q1 = random_factor(rng, n, lin), q2 = random_factor(rng, n, lin);
        const Expr u = random_test_polynomial(rng, n, 4);
        const Expr expanded = instantiate(expand_product({q1, q2}).to_expr(), {u}, n);
        const Expr sequential = act(q1, u, act(q2, u, u));
        for (int s = 0; s < 8; ++s) {
          Bindings b;
          for (int i = 1; i <= n; ++i) b[VarId::x(i)] = uniform(rng, -1, 1);
          EXPECT_LE(rel(eval(expanded, b), eval(sequential, b)), 1e-9);
        }
      }
}

TEST(Operator, LinearFactorsGiveLinearExpansion) {
  Rng rng(22);
  for (int n = 1; n <= 2; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      const auto e = expand_product({random_factor(rng, n, Linearity::Linear), random_factor(rng, n, Linearity::Linear)});
      EXPECT_TRUE(e.is_linear());
      for (const auto& [mono, c] : e.terms()) {
        EXPECT_EQ(mono.size(), 1u);
        EXPECT_EQ(mono[0].second, 1);
      }
    }
}

TEST(Operator, QuasiLinearInventory) {
  Rng rng(23);
  for (int n = 1; n <= 2; ++n)
    for (int trial = 0; trial < 20; ++trial) {
      const auto e = expand_product({random_factor(rng, n, Linearity::QuasiLinear),
                                     random_factor(rng, n, Linearity::QuasiLinear)});
      for (const auto& [mono, c] : e.terms()) {
        int degree = 0;
        for (const auto& [v, k] : mono)
          if (v.is_jet() && v.deriv.order >= 1) degree += k;
        EXPECT_LE(degree, 2);
        EXPECT_FALSE(contains_var(c, [](const VarId& v) { return v.is_jet() && v.deriv.order >= 1; }));
      }
    }
}

TEST(Operator, DiagonalMatrixMatchesScalar) {
  Rng rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 2;
    MatrixOperator n1(1, m), n2(1, m);
    std::vector<std::pair<DiffOperator, DiffOperator>> diag;
    for (int p = 1; p <= m; ++p) {
      const auto a = random_factor(rng, 1, Linearity::Linear), b = random_factor(rng, 1, Linearity::Linear);
      for (const auto& [d, c] : a.coeffs()) n1.at(p, p).set(d, c);
      for (const auto& [d, c] : b.coeffs()) n2.at(p, p).set(d, c);
      diag.emplace_back(a, b);
    }
    const auto g = matrix_expand_product({n1, n2});
    for (int p = 1; p <= m; ++p)
      for (int q = 1; q <= m; ++q) {
        if (p != q) {
          EXPECT_TRUE(g[p - 1][q - 1].is_zero());
          continue;
        }
        ExpandOptions o;
        o.target = q;
        auto a = diag[p - 1].first, b = diag[p - 1].second;
        DiffOperator am(1, m), bm(1, m);
        for (const auto& [d, c] : a.coeffs()) am.set(d, c);
        for (const auto& [d, c] : b.coeffs()) bm.set(d, c);
        EXPECT_EQ(g[p - 1][q - 1], expand_product({am, bm}, o));
      }
  }
}

}  // namespace
}  // namespace difactor
