#include "cecm/gauss_legendre.hpp"

#include <cmath>

namespace cecm {

namespace {

// Legendre P_n and its derivative at x by the three-term recurrence.
void legendre(int n, double x, double& pn, double& dpn) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    pn = p0;
    dpn = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  dpn = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

GaussRule1d gauss_legendre(int n) {
  if (n < 1) throw InputError("gauss_legendre: need n >= 1 points");
  GaussRule1d rule;
  rule.nodes = Vector::Zero(n);
  rule.weights = Vector::Zero(n);

  const int half = (n + 1) / 2;
  constexpr double pi = 3.14159265358979323846;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-based initial guess for the i-th root in descending order.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0, dpn = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, pn, dpn);
      const double dx = pn / dpn;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    legendre(n, x, pn, dpn);
    const double w = 2.0 / ((1.0 - x * x) * dpn * dpn);
    // Mirror so the rule is exactly antisymmetric.
    rule.nodes(n - 1 - i) = x;
    rule.nodes(i) = -x;
    rule.weights(n - 1 - i) = w;
    rule.weights(i) = w;
  }
  if (n % 2 == 1) rule.nodes((n - 1) / 2) = 0.0;
  return rule;
}

}  // namespace cecm
