#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <span>

#include "scftpl/action_set.hpp"
#include "scftpl/perturbation.hpp"
#include "scftpl/rng.hpp"

namespace scftpl {

/// K(x) for the ball perturbation in dimension d >= 2, where
///   Q = K/(d-1) * (I - p_theta) + (1 - K) * p_theta,  x = |theta|.
///
/// Values come from a lazily filled grid in w = x/(1+x) with cubic Lagrange
/// interpolation; points beyond the grid are computed directly. Grid nodes are written
/// at most once with deterministic values, so concurrent readers are safe and results
/// do not depend on evaluation order.
class KFunction {
 public:
  explicit KFunction(std::size_t d, std::size_t grid_nodes = 4096, double w_max = 0.999);

  /// Process-wide instance for dimension d (created on first use).
  static std::shared_ptr<const KFunction> shared(std::size_t d);

  std::size_t dimension() const { return dim_; }
  double operator()(double x) const;
  /// Direct quadrature, no interpolation.
  double exact(double x) const;
  std::size_t nodes_computed() const;

 private:
  double node(std::size_t j) const;

  std::size_t dim_;
  std::size_t n_;
  double w_max_, h_;
  std::unique_ptr<std::atomic<double>[]> cache_;
};

/// Direct evaluation of K(x) by nested adaptive quadrature. Requires d >= 2.
double k_function_ball(double x, std::size_t d);

/// Hypercube slots: x, gap_i = 1 - x_i^2, alpha = sum x_i^2/gap_i (Q = x x^T + diag(gap)).
/// Ball slots: theta, |theta|^2 and k = K(|theta|).
struct CovarianceModel {
  SetKind kind = SetKind::Hypercube;
  Vector x, gap;
  double alpha = 0.0;
  Vector theta;
  double theta_sq = 0.0;
  double k = 0.0;

  std::size_t dimension() const { return kind == SetKind::Hypercube ? x.size() : theta.size(); }
};

/// Covariance models are refused when some 1 - x_i^2 falls below this.
inline constexpr double kCovarianceGapFloor = 1e-10;

CovarianceModel covariance_hypercube(std::span<const double> x);
CovarianceModel covariance_ball(std::span<const double> theta, double k);
CovarianceModel covariance_ball(std::span<const double> theta, const KFunction& K);

/// Q^{-1} A in O(d) for the hypercube.
Vector apply_qinv_hypercube(const CovarianceModel& model, std::span<const double> A);
/// Q^{-1} A in O(d) for the ball; d A when theta = 0, A when d = 1.
Vector apply_qinv_ball(const CovarianceModel& model, std::span<const double> A);
Vector apply_qinv(const CovarianceModel& model, std::span<const double> A);
/// Q v in O(d).
Vector apply_q(const CovarianceModel& model, std::span<const double> v);

/// y_hat = Q^{-1} A * observed_loss.
Vector estimate_loss(const CovarianceModel& model, std::span<const double> A,
                     double observed_loss);

/// Eigenpair i of the barrier Hessian at its center: returns lambda_i and writes v_i.
/// Hypercube: (h_i, e_i). Ball: i = 0 is x/|x|, the rest a Householder completion.
double hessian_eigenpair(const LocalNormContext& hessian, std::size_t i, std::span<double> v);

/// Pole x + sign * lambda_i^{-1/2} v_i of the Dikin ellipsoid.
Vector dikin_pole(const LocalNormContext& hessian, std::size_t i, int sign);

/// d * Hess(x) (A - x) * observed_loss.
Vector scribble_estimate(const ActionSet& set, std::span<const double> x,
                         std::span<const double> A, double observed_loss);

double local_norm_sq(const LocalNormContext& context, std::span<const double> v,
                     bool inverse);

/// Monte-Carlo estimate of Q = E[A A^T] for A = grad phi_K(theta + xi), row-major d x d.
struct MonteCarloQ {
  std::size_t d = 0;
  Vector mean;
  Vector stderr_;
};
MonteCarloQ monte_carlo_q(const ActionSet& set, const PerturbationSampler& sampler,
                          std::span<const double> theta, std::size_t n_samples,
                          CounterRng& rng);

}  // namespace scftpl
