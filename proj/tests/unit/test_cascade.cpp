#include <gtest/gtest.h>

#include <cmath>

#include "difactor/cascade.hpp"
#include "difactor/errors.hpp"
#include "support.hpp"

namespace difactor {
namespace {

using testing::ode_factor;
using testing::ode_operator;

Expr P(const char* s) { return parse_expr(s); }

const CascadeEntry& entry(const CascadeSolution& s, const std::string& name) {
  for (const auto& e : s.entries)
    if (e.name == name) return e;
  throw std::runtime_error("no entry " + name);
}

TEST(Cascade, DistinctConstantRoots) {
  const auto s = cascade_ode(Candidate{{ode_factor(1, -1), ode_factor(1, -2)}, {}});
  EXPECT_EQ(*entry(s, "u0").closed_form, simplify(P("exp(2*x1)")));
  EXPECT_EQ(*entry(s, "v1").closed_form, simplify(P("exp(x1)")));
  EXPECT_EQ(*entry(s, "u1").closed_form, simplify(P("-exp(x1)")));
  for (const auto& e : s.entries) {
    EXPECT_EQ(e.source, SolutionSource::ClosedForm);
    EXPECT_TRUE(e.residual.symbolic_zero) << e.name;
    EXPECT_EQ(e.residual.points.size(), 32u);
  }
}

TEST(Cascade, DoubleZeroRoot) {
  const auto s = cascade_ode(Candidate{{ode_factor(1, 0), ode_factor(1, 0)}, {}});
  EXPECT_EQ(*entry(s, "u0").closed_form, Expr(1));
  EXPECT_EQ(*entry(s, "v1").closed_form, Expr(1));
  EXPECT_EQ(*entry(s, "u1").closed_form, Expr::x(1));
}

TEST(Cascade, NonlinearBernoulli) {
  const Candidate c{{ode_factor(1, 0, Linearity::QuasiLinear),
                     ode_factor(1, parse_expr("u/2", {false, true}), Linearity::QuasiLinear)},
                    {}};
  CascadeOptions o;
  o.interval = {0.0, 1.0};
  const auto s = cascade_ode(c, o);
  ASSERT_EQ(s.entries.size(), 1u);
  EXPECT_EQ(*s.entries[0].closed_form, simplify(P("2/(x1+1)")));
  EXPECT_TRUE(s.entries[0].residual.symbolic_zero);

  o.C = 3;
  EXPECT_EQ(*cascade_ode(c, o).entries[0].closed_form, simplify(P("2/(x1+3)")));
}

TEST(Cascade, VariableCoefficientsFallBackToQuadrature) {
  const auto s = cascade_ode(Candidate{{ode_factor(2, 3), ode_factor(1, P("x1^2"))}, {}});
  const auto& u1 = entry(s, "u1");
  EXPECT_EQ(u1.source, SolutionSource::Quadrature);
  EXPECT_LT(u1.residual.max_relative, 1e-5);
  EXPECT_TRUE(entry(s, "u0").residual.symbolic_zero);
}

TEST(Cascade, SingularLeadingCoefficient) {
  EXPECT_THROW(cascade_ode(Candidate{{ode_factor(1, 0), ode_factor(P("x1"), 1)}, {}}), SingularLeadingCoefficient);
}

TEST(Cascade, AntiderivativeTable) {
  for (const char* f : {"x1^3", "1/x1", "1/(2*x1+1)", "x1*exp(3*x1)", "sin(2*x1)", "cos(x1/2)", "3*x1^2 - exp(-x1)"}) {
    const auto F = antiderivative(P(f));
    ASSERT_TRUE(F.has_value()) << f;
    EXPECT_EQ(simplify(diff(*F, VarId::x(1))), simplify(P(f))) << f;
  }
  EXPECT_FALSE(antiderivative(P("exp(x1^2)")).has_value());
}

TEST(Cascade, VerifyExamples) {
  const auto p = ode_operator(1, -3, 2);
  const auto pts = ode_points(grid(-1, 1, 5));
  const auto r1 = verify_solution(p, P("exp(x1)"), pts);
  EXPECT_TRUE(r1.symbolic_zero);
  EXPECT_EQ(r1.max_abs, 0.0);
  const auto rn = verify_solution(p, std::function<double(double)>([](double x) { return std::exp(x); }), grid(-1, 1, 5));
  EXPECT_LT(rn.max_relative, 1e-12 * 1e3);  // five-point stencil, h = 1e-3

  const auto r3 = verify_solution(p, P("exp(3*x1)"), pts);
  EXPECT_FALSE(r3.symbolic_zero);
  EXPECT_EQ(*r3.symbolic, simplify(P("2*exp(3*x1)")));
  for (std::size_t i = 0; i < pts.size(); ++i)
    EXPECT_NEAR(r3.values[i], 2 * std::exp(3 * r3.points[i]), 1e-9 * std::exp(3.0));

  const auto r0 = verify_solution(ode_operator(P("x1"), 5, P("x1^2")), Expr(0), pts);
  EXPECT_TRUE(r0.symbolic_zero);
}

TEST(Cascade, UndefinedPointsAreCounted) {
  const Candidate c{{ode_factor(1, 0, Linearity::QuasiLinear),
                     ode_factor(1, parse_expr("u/2", {false, true}), Linearity::QuasiLinear)},
                    {}};
  const auto s = cascade_ode(c);  // 2/(x1+1) on [-1,1] is undefined at -1
  EXPECT_EQ(s.entries[0].residual.undefined_points, 1u);
  EXPECT_TRUE(std::isnan(s.entries[0].columns[0].values[0][0]));
}

// Random factorable constant-coefficient operators: both cascade outputs
// verify symbolically, and u0, u1 are independent for distinct roots.
TEST(Cascade, ConstantBattery) {
  Rng rng(51);
  int distinct = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Rational r1 = testing::small_rational(rng), r2 = testing::small_rational(rng);
    const Candidate c{{ode_factor(1, Expr(Rational(-r1))), ode_factor(1, Expr(Rational(-r2)))}, {}};
    const auto p = testing::planted_operator(c, Linearity::Linear);
    const auto s = cascade_ode(c);
    const auto pts = ode_points(grid(-1, 1, 32));
    for (const char* name : {"u0", "u1"}) {
      const auto& e = entry(s, name);
      ASSERT_TRUE(e.closed_form.has_value());
      EXPECT_TRUE(verify_solution(p, *e.closed_form, pts).symbolic_zero) << name;
    }
    EXPECT_TRUE(verify_solution(c.factors[0], *entry(s, "v1").closed_form, pts).symbolic_zero);
    if (r1 != r2) {
      ++distinct;
      const Expr u0 = *entry(s, "u0").closed_form, u1 = *entry(s, "u1").closed_form;
      const Expr w = simplify(u0 * diff(u1, VarId::x(1)) - diff(u0, VarId::x(1)) * u1);
      EXPECT_GT(std::fabs(eval(w, {{VarId::x(1), 0.25}})), 1e-12);
    }
  }
  EXPECT_GT(distinct, 0);
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

CascadeSolution diag_system(int steps) {
  CascadeOptions o;
  o.interval = {0.0, 1.0};
  o.steps = steps;
  return cascade_system_numeric(Candidate{{},
                                          {constant_matrix({{{1, -1}, {0, 0}}, {{0, 0}, {1, -1}}}),
                                           constant_matrix({{{1, -2}, {0, 0}}, {{0, 0}, {1, 1}}})}},
                                o);
}

double worst(const CascadeSolution& s) {
  double r = 0;
  for (const auto& e : s.entries) r = std::max(r, e.residual.max_relative);
  return r;
}

TEST(Cascade, SystemDiagonal) {
  const auto s = diag_system(1024);
  EXPECT_LE(worst(s), 1e-5);
  const auto& u0 = entry(s, "u0");
  ASSERT_EQ(u0.columns.size(), 2u);
  const auto& c1 = u0.columns[0];
  const auto& c2 = u0.columns[1];
  for (std::size_t i = 0; i < c1.x.size(); i += 128) {
    EXPECT_NEAR(c1.values[0][i], std::exp(2 * c1.x[i]), 1e-9);
    EXPECT_NEAR(c1.values[1][i], 0.0, 1e-12);
    EXPECT_NEAR(c2.values[1][i], std::exp(-c2.x[i]), 1e-9);
  }
  for (const auto& e : s.entries) EXPECT_EQ(e.source, SolutionSource::RK4);
}

TEST(Cascade, SystemConvergence) {
  const double a = worst(diag_system(1024)), b = worst(diag_system(2048));
  EXPECT_GE(a / b, 3.5);
}

TEST(Cascade, SystemCoupled) {
  CascadeOptions o;
  o.interval = {0.0, 1.0};
  const auto s = cascade_system_numeric(Candidate{{},
                                                  {constant_matrix({{{1, 0}, {0, 1}}, {{0, 0}, {1, 0}}}),
                                                   constant_matrix({{{1, 0}, {0, 0}}, {{0, 2}, {1, 0}}})}},
                                        o);
  EXPECT_LE(worst(s), 1e-5);
  // First column: u1 = 1, u2 = -2x.
  const auto& col = entry(s, "u0").columns[0];
  for (std::size_t i = 0; i < col.x.size(); i += 64) {
    EXPECT_NEAR(col.values[0][i], 1.0, 1e-12);
    EXPECT_NEAR(col.values[1][i], -2 * col.x[i], 1e-12);
  }
}

TEST(Cascade, SystemErrors) {
  const auto n1 = constant_matrix({{{1, -1}, {0, 0}}, {{0, 0}, {1, -1}}});
  const auto id = constant_matrix({{{0, 1}, {0, 0}}, {{0, 0}, {0, 1}}});
  EXPECT_THROW(cascade_system_numeric(Candidate{{}, {n1, id}}), SingularLeadingCoefficient);
  CascadeOptions o;
  o.steps = 2;
  EXPECT_THROW(cascade_system_numeric(Candidate{{}, {n1, n1}}, o), StepCountTooSmall);
}

}  // namespace
}  // namespace difactor
