#pragma once

// Particular solutions of P u = 0 from a two-factor factorization P = Q1 Q2:
// u0 with Q2 u0 = 0, v1 with Q1 v1 = 0 and u1 with Q2 u1 = v1. Both u0 and
// u1 solve P u = 0.

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "difactor/conditions.hpp"

namespace difactor {

enum class SolutionSource { ClosedForm, Quadrature, RK4 };

std::string to_string(SolutionSource s);

/// Samples of m components on a grid; values[c][i] is component c at x[i].
struct Trajectory {
  std::vector<double> x;
  std::vector<std::vector<double>> values;
};

struct ResidualReport {
  std::vector<double> points;  // first coordinate of every verification point
  std::vector<double> values;  // |residual| per point
  double max_abs = 0.0;
  /// Residual divided by max(1, largest single term) at each point.
  double max_relative = 0.0;
  std::optional<Expr> symbolic;  // closed-form solutions only
  bool symbolic_zero = false;
  std::size_t undefined_points = 0;  // points where the solution is not defined
};

struct CascadeEntry {
  std::string name;  // "u0", "v1", "u1"
  SolutionSource source = SolutionSource::ClosedForm;
  std::optional<Expr> closed_form;
  /// One trajectory per solution column (systems have m columns); scalar
  /// entries carry a single one-component trajectory on the residual grid.
  std::vector<Trajectory> columns;
  ResidualReport residual;  // u0, u1 against P; v1 against Q1
};

struct CascadeSolution {
  std::vector<CascadeEntry> entries;
  std::pair<double, double> interval;
};

struct CascadeOptions {
  std::pair<double, double> interval{-1.0, 1.0};
  Rational C = 1;  // constant of the nonlinear first integral
  int steps = 1024;
  int residual_points = 32;
};

/// Scalar ODE cascade. Linear candidates give u0, v1 and u1, each in closed
/// form when the antiderivatives are in the table and by quadrature
/// otherwise; homogeneous solutions equal 1 at the interval midpoint. A
/// quasi-linear candidate gives u0 only, for Q2 of Bernoulli shape. Samples
/// are NaN where a closed form is undefined.
/// Throws SingularLeadingCoefficient, QuadratureFailure, UnsupportedTemplate.
CascadeSolution cascade_ode(const Candidate& cand, const CascadeOptions& opts = {});

/// First-order linear system cascade by fixed-step RK4 from identity columns
/// at the left end of the interval. Throws SingularLeadingCoefficient,
/// StepCountTooSmall, UnsupportedTemplate.
CascadeSolution cascade_system_numeric(const Candidate& cand, const CascadeOptions& opts = {});

/// Antiderivative in x1 from the table (polynomials, 1/(linear), x^k exp(linear),
/// sin and cos of linear arguments), without a constant; nullopt otherwise.
std::optional<Expr> antiderivative(const Expr& f);

/// Evenly spaced points including both ends.
std::vector<double> grid(double a, double b, int points);

/// Symbolic and pointwise residual of P u for a closed-form u.
ResidualReport verify_solution(const DiffOperator& p, const Expr& u, const std::vector<Bindings>& points);
/// Same for a nonlinear operator given by its jet polynomial.
ResidualReport verify_solution(const JetPolynomial& p, const Expr& u, const std::vector<Bindings>& points);
/// Finite-difference residual of a numerically given solution of an ODE.
ResidualReport verify_solution(const DiffOperator& p, const std::function<double(double)>& u,
                               const std::vector<double>& points);

std::vector<Bindings> ode_points(const std::vector<double>& xs);

}  // namespace difactor
