#pragma once

#include <functional>
#include <initializer_list>
#include <vector>

namespace scftpl {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  double l1 = 0.0;     // integral of |f|
};

using Integrand = std::function<double(double)>;

/// Adaptive 15-point Gauss-Kronrod on [a, b]. Throws NumericError when the
/// error estimate stays above rel_tol * l1 (and above abs_floor) after max_depth bisections.
QuadratureResult integrate(const Integrand& f, double a, double b, double rel_tol,
                           unsigned max_depth = 18, double abs_floor = 0.0);

/// Same, split at the given interior breakpoints (ignored if outside (a, b)).
QuadratureResult integrate(const Integrand& f, double a, double b,
                           const std::vector<double>& breakpoints, double rel_tol,
                           unsigned max_depth = 18, double abs_floor = 0.0);

/// Integral over [a, +inf) through the map x = a + (1 - w) / w, w in (0, 1].
/// Suited to integrands with power-law tails of order x^-2 or faster.
QuadratureResult integrate_to_infinity(const Integrand& f, double a, double rel_tol,
                                       unsigned max_depth = 18, double abs_floor = 0.0);

/// Fixed (non-adaptive) 15-point Kronrod rule on [a, b].
double kronrod15(const Integrand& f, double a, double b);

}  // namespace scftpl
