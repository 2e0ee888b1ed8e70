#pragma once

#include <functional>
#include <span>
#include <vector>

namespace wshift {

/// Standard normal CDF, via erfc for full relative accuracy in the lower tail.
double normal_cdf(double z);

/// Standard normal quantile (Wichura's AS 241, PPND16). Relative accuracy is
/// about 1e-16 on (0, 1); returns -inf / +inf at 0 / 1.
double normal_quantile(double p);

double normal_pdf(double z);

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// m-point Gauss-Legendre rule; cached per m.
const GaussLegendreRule& gauss_legendre(int m);

/// Integral of f over [a, b] with a single m-point rule.
double integrate_gl(const std::function<double(double)>& f, double a, double b, int m = 8);

/// Composite rule: breakpoints split [a, b] and every piece is further cut into
/// panels no longer than max_panel.
double integrate_composite(const std::function<double(double)>& f, std::span<const double> points,
                           double max_panel, int m = 8);

/// Smallest x in [lo, hi] with g(x) >= target for nondecreasing g, to within
/// tol (absolute) or exhausted bisection steps.
double bisect_nondecreasing(const std::function<double(double)>& g, double target, double lo,
                            double hi, double tol = 1e-15, int max_iter = 200);

}  // namespace wshift
