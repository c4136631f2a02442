#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace scftpl {

using Vector = std::vector<double>;

enum class SetKind { Hypercube, EuclideanBall };

std::string_view to_string(SetKind kind);

/// Points closer than this to the boundary (1 - max|x_i|, resp. 1 - ||x||)
/// are treated as boundary points by the barrier operations.
inline constexpr double kInteriorMargin = 1e-12;

/// Hessian of the barrier at an interior point, stored in O(d):
/// diagonal entries for the hypercube, the pair (a, b) of a*I + b*x*x^T for the ball.
class LocalNormContext {
 public:
  static LocalNormContext diagonal(Vector center, Vector diag);
  static LocalNormContext rank_one(Vector center, double a, double b);

  SetKind kind() const { return kind_; }
  const Vector& center() const { return center_; }
  const Vector& diag() const { return diag_; }
  double scale() const { return a_; }
  double rank_one_coeff() const { return b_; }

  /// v^T H v, or v^T H^{-1} v when inverse is set.
  double norm_sq(std::span<const double> v, bool inverse = false) const;
  Vector apply(std::span<const double> v) const;
  /// H^{-1} v; Sherman-Morrison for the ball.
  Vector apply_inverse(std::span<const double> v) const;

 private:
  SetKind kind_ = SetKind::Hypercube;
  Vector center_;
  Vector diag_;
  double a_ = 0.0, b_ = 0.0;
  double center_sq_ = 0.0;
};

/// A convex body K (hypercube [-1,1]^d or unit ball) with its log barrier
///   hypercube: R(x) = -sum ln(1 - x_i^2)   (parameter d)
///   ball:      R(x) = -ln(1 - ||x||^2)     (parameter 1)
/// and the closed forms the learners need. Immutable; safe to share.
class ActionSet {
 public:
  ActionSet(SetKind kind, std::size_t dimension);
  static ActionSet hypercube(std::size_t d) { return ActionSet(SetKind::Hypercube, d); }
  static ActionSet ball(std::size_t d) { return ActionSet(SetKind::EuclideanBall, d); }

  SetKind kind() const { return kind_; }
  std::size_t dimension() const { return dim_; }
  double barrier_parameter() const;

  /// argmin over K of <a, direction>. Ties: coordinate +1 where direction_i == 0
  /// (hypercube); e_1 for a zero direction (ball).
  Vector linear_minimizer(std::span<const double> direction) const;
  /// Gradient of the support function, argmax over K of <a, theta> (same tie rule).
  Vector support_gradient(std::span<const double> theta) const;
  /// Support function phi_K(theta) = max over K of <a, theta>.
  double support(std::span<const double> theta) const;

  bool is_interior(std::span<const double> x) const;
  double barrier_value(std::span<const double> x) const;
  Vector barrier_gradient(std::span<const double> x) const;
  LocalNormContext barrier_hessian(std::span<const double> x) const;

  /// grad R*(theta); always strictly inside K in exact arithmetic.
  Vector conjugate_gradient(std::span<const double> theta) const;
  /// R*(theta) = <grad R*(theta), theta> - R(grad R*(theta)).
  double conjugate_value(std::span<const double> theta) const;

  /// Minkowski gauge pi_center(y) = inf{t > 0 : center + (y - center)/t in K}.
  double minkowski_gauge(std::span<const double> center, std::span<const double> y) const;

 private:
  void check_dimension(std::span<const double> v, const char* what) const;
  void require_interior(std::span<const double> x, const char* op) const;

  SetKind kind_;
  std::size_t dim_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm_sq(std::span<const double> a);

}  // namespace scftpl
