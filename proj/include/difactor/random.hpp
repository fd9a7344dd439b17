#pragma once

// Deterministic sampling helpers shared by the numeric layers.

#include <cstdint>
#include <random>

#include "difactor/expr.hpp"

namespace difactor {

using Rng = std::mt19937_64;

/// Uniform in [0,1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);

/// Random polynomial of total degree <= degree in x1..xn whose coefficients
/// are drawn uniformly from [-2,2] and converted exactly to rationals.
Expr random_test_polynomial(Rng& rng, int n, int degree);

}  // namespace difactor
