#include "scftpl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "scftpl/errors.hpp"

namespace scftpl {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Panel {
  double a, b;
  double value, error, l1;
  bool operator<(const Panel& other) const { return error < other.error; }
};

// One G7/K15 pair with the QUADPACK error heuristic.
Panel evaluate_panel(const Integrand& f, double a, double b) {
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  // Gauss-7 weights on the even Kronrod abscissae (0, x2, x4, x6).
  static constexpr double kGauss[4] = {0.417959183673469387755102040816327,
                                       0.381830050505118944950369775488975,
                                       0.279705391489276667901467771423780,
                                       0.129484966168869693270611432679082};
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);

  double fv[15];
  fv[0] = f(mid);
  for (std::size_t i = 1; i < 8; ++i) {
    fv[2 * i - 1] = f(mid - half * x[i]);
    fv[2 * i] = f(mid + half * x[i]);
  }

  double kron = w[0] * fv[0];
  double gauss = kGauss[0] * fv[0];
  double abs_sum = w[0] * std::abs(fv[0]);
  for (std::size_t i = 1; i < 8; ++i) {
    const double pair = fv[2 * i - 1] + fv[2 * i];
    kron += w[i] * pair;
    abs_sum += w[i] * (std::abs(fv[2 * i - 1]) + std::abs(fv[2 * i]));
    if (i % 2 == 0) gauss += kGauss[i / 2] * pair;
  }
  const double mean = 0.5 * kron;
  double asc = w[0] * std::abs(fv[0] - mean);
  for (std::size_t i = 1; i < 8; ++i) {
    asc += w[i] * (std::abs(fv[2 * i - 1] - mean) + std::abs(fv[2 * i] - mean));
  }

  Panel p{a, b, kron * half, std::abs((kron - gauss) * half), abs_sum * std::abs(half)};
  asc *= std::abs(half);
  if (asc != 0.0 && p.error != 0.0) {
    p.error = asc * std::min(1.0, std::pow(200.0 * p.error / asc, 1.5));
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (p.l1 > std::numeric_limits<double>::min() / (50.0 * eps)) {
    p.error = std::max(50.0 * eps * p.l1, p.error);
  }
  return p;
}

}  // namespace

QuadratureResult integrate(const Integrand& f, double a, double b, double rel_tol,
                           unsigned max_depth, double abs_floor) {
  QuadratureResult r;
  if (a == b) return r;
  const std::size_t max_panels = std::size_t{1} << std::min(max_depth, 14u);

  std::priority_queue<Panel> heap;
  Panel first = evaluate_panel(f, a, b);
  double total = first.value, err = first.error, l1 = first.l1;
  heap.push(first);
  auto target = [&] { return std::max(rel_tol * std::abs(total), abs_floor); };

  const double min_width = std::abs(b - a) * std::ldexp(1.0, -static_cast<int>(max_depth) - 20);
  while (err > target() && heap.size() < max_panels) {
    const Panel worst = heap.top();
    if (std::abs(worst.b - worst.a) < min_width) break;
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    const Panel left = evaluate_panel(f, worst.a, m);
    const Panel right = evaluate_panel(f, m, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the panels to shed accumulated cancellation in the running totals.
  total = err = l1 = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    l1 += heap.top().l1;
    heap.pop();
  }
  r = {total, err, l1};
  if (!std::isfinite(r.value)) {
    throw NumericError("quadrature produced a non-finite value on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
  }
  if (r.error > 10.0 * std::max(rel_tol * std::abs(r.value), abs_floor)) {
    throw NumericError("quadrature did not converge on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]: error estimate " + std::to_string(r.error) +
                       " for value " + std::to_string(r.value));
  }
  return r;
}

QuadratureResult integrate(const Integrand& f, double a, double b,
                           const std::vector<double>& breakpoints, double rel_tol,
                           unsigned max_depth, double abs_floor) {
  std::vector<double> cuts{a};
  for (double c : breakpoints) {
    if (c > a && c < b) cuts.push_back(c);
  }
  std::sort(cuts.begin() + 1, cuts.end());
  cuts.push_back(b);

  // Each piece gets the relative target of the whole; pieces are positive in
  // every use here, so the combined relative error stays within rel_tol.
  QuadratureResult total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    const auto part = integrate(f, cuts[i], cuts[i + 1], rel_tol, max_depth, abs_floor);
    total.value += part.value;
    total.error += part.error;
    total.l1 += part.l1;
  }
  return total;
}

QuadratureResult integrate_to_infinity(const Integrand& f, double a, double rel_tol,
                                       unsigned max_depth, double abs_floor) {
  auto mapped = [&](double w) {
    if (w <= 0.0) return 0.0;
    const double x = a + (1.0 - w) / w;
    return f(x) / (w * w);
  };
  return integrate(mapped, 0.0, 1.0, rel_tol, max_depth, abs_floor);
}

double kronrod15(const Integrand& f, double a, double b) {
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = w[0] * f(mid);
  for (std::size_t i = 1; i < x.size(); ++i) {
    sum += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
  }
  return sum * half;
}

}  // namespace scftpl
