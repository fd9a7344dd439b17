#include <gtest/gtest.h>

#include <set>

#include "difactor/errors.hpp"
#include "difactor/factor.hpp"
#include "support.hpp"

namespace difactor {
namespace {

using testing::ode_factor;
using testing::ode_operator;

Expr P(const char* s) { return parse_expr(s); }

std::set<std::string> printed(const std::vector<Candidate>& cs) {
  std::set<std::string> out;
  for (const auto& c : cs) out.insert("(" + to_string(c.factors[0]) + ")(" + to_string(c.factors[1]) + ")");
  return out;
}

void expect_all_pass(const DiffOperator& p, const std::vector<Candidate>& cs) {
  for (const auto& c : cs) EXPECT_TRUE(check_candidate(p, c).pass);
}

TEST(Factor, ConstantExamples) {
  const auto p = ode_operator(1, -3, 2);
  const auto cs = factor_constant(p);
  EXPECT_EQ(printed(cs), (std::set<std::string>{"(D_{(1,1)} - 1)(D_{(1,1)} - 2)", "(D_{(1,1)} - 2)(D_{(1,1)} - 1)"}));
  expect_all_pass(p, cs);

  EXPECT_THROW(factor_constant(ode_operator(1, 0, 1)), NoRealFactorization);
  EXPECT_THROW(factor_constant(ode_operator(1, P("x1"), 1)), NotConstant);

  const auto dd = factor_constant(ode_operator(1, 0, 0));
  ASSERT_EQ(dd.size(), 1u);
  EXPECT_EQ(printed(dd), (std::set<std::string>{"(D_{(1,1)})(D_{(1,1)})"}));
}

TEST(Factor, ConstantWithoutSwap) {
  SearchConfig cfg;
  cfg.allow_swap = false;
  EXPECT_EQ(factor_constant(ode_operator(1, -3, 2), cfg).size(), 1u);
}

TEST(Factor, ConstantIrrationalRoots) {
  const auto p = ode_operator(1, 1, -1);
  const auto cs = factor_constant(p);
  ASSERT_EQ(cs.size(), 2u);
  expect_all_pass(p, cs);
}

// (D - r1)(D - r2) expanded, then the roots recovered exactly.
TEST(Factor, ConstantRecoversPlantedRoots) {
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    const Rational r1 = testing::small_rational(rng) + testing::small_rational(rng);
    const Rational r2 = testing::small_rational(rng);
    const Rational lead = testing::nonzero_rational(rng);
    auto p = testing::planted_operator(Candidate{{ode_factor(Expr(lead), Expr(Rational(-lead * r1))), ode_factor(1, Expr(Rational(-r2)))}, {}},
                                       Linearity::Linear);
    std::set<Rational> roots;
    for (const auto& c : factor_constant(p)) {
      EXPECT_TRUE(check_candidate(p, c).pass);
      const auto& q2 = c.factors[1];
      roots.insert(-*as_constant(q2.coeff(0, 1)) / *as_constant(q2.coeff(1, 1)));
    }
    EXPECT_EQ(roots, (std::set<Rational>{r1, r2}));
  }
}

TEST(Factor, RiccatiExamples) {
  {
    const auto prob = RiccatiProblem::from_operator(ode_operator(1, -3, 2));
    const auto ys = solve_riccati_ansatz(prob);
    std::set<std::string> s;
    for (const auto& y : ys) s.insert(to_string(y));
    EXPECT_EQ(s, (std::set<std::string>{"-1", "-2"}));
  }
  {
    const auto p = ode_operator(1, 0, P("-(x1^2+1)"));
    const auto prob = RiccatiProblem::from_operator(p);
    bool found = false;
    for (const auto& y : solve_riccati_ansatz(prob)) found = found || y == simplify(P("-x1"));
    EXPECT_TRUE(found);
    const auto cs = factor_riccati(p);
    EXPECT_TRUE(printed(cs).count("(D_{(1,1)} + x1)(D_{(1,1)} - x1)"));
    expect_all_pass(p, cs);
  }
  {
    SearchConfig cfg;
    cfg.ansatz_degree = 0;
    const auto ys = solve_riccati_ansatz(RiccatiProblem::from_operator(ode_operator(1, 0, 0)), cfg);
    ASSERT_EQ(ys.size(), 1u);
    EXPECT_TRUE(ys[0].is_zero_literal());
  }
}

TEST(Factor, RiccatiRejectsNonPolynomial) {
  EXPECT_THROW(factor_riccati(ode_operator(P("x1"), 1, 1)), NonPolynomialCoefficients);
}

TEST(Factor, PerturbedPlantMayStillFactor) {
  // (D + 2x)(D + x) = D^2 + 3x D + 2x^2 + 1; adding 1 to the last
  // coefficient gives (D + x)(D + 2x), which factors as well.
  for (const char* g0 : {"2*x1^2 + 1", "2*x1^2 + 2"}) {
    const auto p = ode_operator(1, P("3*x1"), P(g0));
    const auto cs = factor_riccati(p);
    EXPECT_FALSE(cs.empty()) << g0;
    expect_all_pass(p, cs);
  }
}

TEST(Factor, AiryHasNoPolynomialFactor) {
  EXPECT_TRUE(factor_riccati(ode_operator(1, 0, P("-x1"))).empty());
}

// Planted in the fixed gauge: Q1 = g D + X, Q2 = D + Y.
struct RiccatiPlant {
  DiffOperator p;
  Expr y;
};

RiccatiPlant plant_riccati(Rng& rng) {
  const Expr g(testing::nonzero_rational(rng));
  const Expr x = testing::random_poly(rng, {Expr::x(1)}, 2);
  const Expr y = testing::random_poly(rng, {Expr::x(1)}, 2);
  return {testing::planted_operator(Candidate{{ode_factor(g, x), ode_factor(1, y)}, {}}, Linearity::Linear), y};
}

TEST(Factor, RiccatiEquivalentToConditions) {
  Rng rng(42);
  const auto sys = derive_conditions(*parse_template("linear-ode"));
  for (int trial = 0; trial < 50; ++trial) {
    const auto plant = plant_riccati(rng);
    const auto prob = RiccatiProblem::from_operator(plant.p);
    for (const Expr& y : {plant.y, simplify(plant.y + Expr::x(1)), simplify(plant.y + Expr(1))}) {
      const bool riccati = is_zero(prob.residual(y));
      const auto c = prob.candidate(y);
      const bool conditions =
          testing::all_zero(condition_residuals(sys, testing::joint_resolver(operator_resolver(plant.p), candidate_resolver(c))));
      EXPECT_EQ(riccati, conditions);
      if (y == plant.y) EXPECT_TRUE(riccati);
    }
  }
}

TEST(Factor, RiccatiRecoversPlants) {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const auto plant = plant_riccati(rng);
    const auto cs = factor_riccati(plant.p);
    EXPECT_FALSE(cs.empty());
    expect_all_pass(plant.p, cs);
    bool found = false;
    for (const auto& c : cs) found = found || c.factors[1].coeff(0, 1) == plant.y;
    EXPECT_TRUE(found);

    DiffOperator perturbed = plant.p;
    perturbed.set(0, 1, simplify(plant.p.coeff(0, 1) + Expr(1)));
    // Perturbed triples usually stop factoring; any Y still found must verify.
    for (const auto& c : factor_riccati(perturbed)) EXPECT_TRUE(check_candidate(perturbed, c).pass);
  }
}

// Rescaling the gauge (b111, b211) -> (c b111, b211 / c) keeps candidates valid.
TEST(Factor, GaugeCovariance) {
  Rng rng(44);
  for (int trial = 0; trial < 20; ++trial) {
    const auto plant = plant_riccati(rng);
    for (const auto& c : factor_riccati(plant.p)) {
      const Expr s(testing::nonzero_rational(rng));
      Candidate r = c;
      for (const auto& [d, v] : c.factors[0].coeffs()) r.factors[0].set(d, simplify(s * v));
      for (const auto& [d, v] : c.factors[1].coeffs()) r.factors[1].set(d, simplify(v / s));
      EXPECT_TRUE(check_candidate(plant.p, r).pass);
    }
  }
}

DiffOperator pde(std::initializer_list<std::tuple<int, int, const char*>> cs) {
  DiffOperator p(2);
  for (const auto& [k, h, s] : cs) p.set(k, static_cast<std::uint64_t>(h), parse_expr(s));
  return p;
}

TEST(Factor, WaveSplits) {
  const auto p = pde({{2, 1, "1"}, {2, 4, "-1"}});
  const auto r = factor_pde_second_order(p);
  EXPECT_EQ(r.delta, Expr(4));
  ASSERT_EQ(r.branches.size(), 2u);
  std::set<std::string> names;
  for (const auto& b : r.branches) {
    EXPECT_TRUE(b.success);
    EXPECT_TRUE(b.g01_residual.is_zero_literal());
    EXPECT_TRUE(check_candidate(p, b.candidate).pass);
    names.insert(to_string(b.candidate.factors[1]));
  }
  EXPECT_TRUE(names.count("D_{(1,1)} - D_{(1,2)}"));
}

TEST(Factor, LaplaceRejected) {
  EXPECT_THROW(factor_pde_second_order(pde({{2, 1, "1"}, {2, 4, "1"}})), NoRealFactorization);
}

TEST(Factor, ParabolicObligation) {
  const auto p = pde({{2, 1, "1"}, {2, 2, "2"}, {2, 4, "1"}});
  const auto r = factor_pde_second_order(p);
  EXPECT_TRUE(r.delta.is_zero_literal());
  ASSERT_TRUE(r.obligation.has_value());
  EXPECT_EQ(to_string(r.obligation->equation), "-Z^2 + d(Z,x1) + d(Z,x2)");
  const auto ck = check_obligation(*r.obligation, Expr(0));
  EXPECT_TRUE(ck.ok);
  EXPECT_TRUE(check_candidate(p, ck.candidate).pass);
  EXPECT_FALSE(check_obligation(*r.obligation, Expr(1)).ok);
}

TEST(Factor, AxesSwapWhenLeadingVanishes) {
  const auto p = pde({{2, 2, "1"}, {2, 4, "1"}});
  const auto r = factor_pde_second_order(p);
  EXPECT_TRUE(r.swapped);
  for (const auto& b : r.branches)
    if (b.success) EXPECT_TRUE(check_candidate(p, b.candidate).pass);
  EXPECT_THROW(factor_pde_second_order(pde({{2, 2, "1"}})), UnsupportedTemplate);
  EXPECT_EQ(swap_axes(swap_axes(p)), p);
}

TEST(Factor, PlantedPdeClosure) {
  Rng rng(45);
  int recovered = 0;
  for (int trial = 0; trial < 20; ++trial) {
    // Constant principal parts keep the discriminant a perfect square.
    DiffOperator q1(2), q2(2);
    q1.set(1, 1, Expr(testing::nonzero_rational(rng)));
    q1.set(1, 2, Expr(testing::small_rational(rng)));
    q1.set(0, 1, testing::random_poly(rng, testing::xs(2), 1));
    q2.set(1, 1, Expr(testing::nonzero_rational(rng)));
    q2.set(1, 2, Expr(testing::small_rational(rng)));
    q2.set(0, 1, testing::random_poly(rng, testing::xs(2), 1));
    const auto p = testing::planted_operator(Candidate{{q1, q2}, {}}, Linearity::Linear);
    try {
      const auto r = factor_pde_second_order(p);
      for (const auto& b : r.branches)
        if (b.success) {
          EXPECT_TRUE(check_candidate(p, b.candidate).pass);
          ++recovered;
        }
    } catch (const NonPolynomialSqrtDelta&) {
      ADD_FAILURE() << "constant principal part gave a non-square discriminant";
    }
  }
  EXPECT_GT(recovered, 0);
}

TEST(Factor, RequiresSecondOrderLinear) {
  EXPECT_THROW(factor_pde_second_order(ode_operator(1, 0, 0)), UnsupportedTemplate);
  EXPECT_THROW(factor_riccati(pde({{2, 1, "1"}})), UnsupportedTemplate);
}

}  // namespace
}  // namespace difactor
