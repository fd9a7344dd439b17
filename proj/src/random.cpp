#include "difactor/random.hpp"

#include <functional>

namespace difactor {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Expr random_test_polynomial(Rng& rng, int n, int degree) {
  std::vector<Expr> terms;
  std::vector<int> exps(static_cast<std::size_t>(n), 0);
  // Enumerates exponent vectors with total degree <= degree in a fixed order.
  std::function<void(int, int)> walk = [&](int axis, int left) {
    if (axis == n) {
      std::vector<Expr> fs{Expr(Rational(uniform(rng, -2.0, 2.0)))};
      for (int i = 0; i < n; ++i) fs.push_back(Expr::power(Expr::x(i + 1), exps[static_cast<std::size_t>(i)]));
      terms.push_back(Expr::product(std::move(fs)));
      return;
    }
    for (int e = 0; e <= left; ++e) {
      exps[static_cast<std::size_t>(axis)] = e;
      walk(axis + 1, left - e);
    }
    exps[static_cast<std::size_t>(axis)] = 0;
  };
  walk(0, degree);
  return simplify(Expr::sum(std::move(terms)));
}

}  // namespace difactor
