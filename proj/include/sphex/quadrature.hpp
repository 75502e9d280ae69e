#pragma once

// Composite Gauss-Legendre quadrature. Nodes come from Newton iteration on
// the Legendre recurrence rather than a hardcoded table, so any panel order
// is available and the rule itself is testable.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphex {

struct GLRule {
  std::vector<double> node;    // in (-1, 1), ascending
  std::vector<double> weight;  // positive, sums to 2
};

// n-point rule on [-1, 1]; exact for polynomials of degree <= 2n - 1.
inline GLRule gauss_legendre(unsigned n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  GLRule r;
  r.node.resize(n);
  r.weight.resize(n);
  const unsigned half = (n + 1) / 2;
  for (unsigned i = 0; i < half; ++i) {
    // Chebyshev-angle starting guess, then Newton on P_n
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (unsigned l = 1; l < n; ++l) {
        const double p2 = ((2 * l + 1) * x * p1 - l * p0) / (l + 1);
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.node[i] = -x;
    r.node[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.weight[i] = w;
    r.weight[n - 1 - i] = w;
  }
  return r;
}

// integral of f over [a, b] split into equal panels, n-point rule per panel
inline double integrate_panels(const std::function<double(double)>& f, double a,
                               double b, const GLRule& rule, unsigned panels) {
  if (panels < 1) throw std::invalid_argument("integrate_panels: need panels >= 1");
  const double h = (b - a) / panels;
  double total = 0.0;
  for (unsigned p = 0; p < panels; ++p) {
    const double mid = a + h * (p + 0.5);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.node.size(); ++i)
      acc += rule.weight[i] * f(mid + 0.5 * h * rule.node[i]);
    total += 0.5 * h * acc;
  }
  return total;
}

}  // namespace sphex
