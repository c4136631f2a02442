#include "scftpl/action_set.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace scftpl {

std::string_view to_string(SetKind kind) {
  return kind == SetKind::Hypercube ? "hypercube" : "ball";
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(std::span<const double> a) { return dot(a, a); }

namespace {

void require_finite(std::span<const double> v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(op) + ": non-finite input");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// LocalNormContext

LocalNormContext LocalNormContext::diagonal(Vector center, Vector diag) {
  LocalNormContext c;
  c.kind_ = SetKind::Hypercube;
  c.center_ = std::move(center);
  c.diag_ = std::move(diag);
  for (double h : c.diag_) {
    if (!(h > 0.0)) throw std::domain_error("hessian diagonal must be positive");
  }
  return c;
}

LocalNormContext LocalNormContext::rank_one(Vector center, double a, double b) {
  if (!(a > 0.0) || !(b >= 0.0)) throw std::domain_error("hessian scalars must be positive");
  LocalNormContext c;
  c.kind_ = SetKind::EuclideanBall;
  c.center_ = std::move(center);
  c.a_ = a;
  c.b_ = b;
  c.center_sq_ = scftpl::norm_sq(c.center_);
  return c;
}

double LocalNormContext::norm_sq(std::span<const double> v, bool inverse) const {
  if (kind_ == SetKind::Hypercube) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += inverse ? v[i] * v[i] / diag_[i] : v[i] * v[i] * diag_[i];
    }
    return s;
  }
  const double vv = scftpl::norm_sq(v);
  const double xv = dot(center_, v);
  if (!inverse) return a_ * vv + b_ * xv * xv;
  const double c = b_ / (a_ + b_ * center_sq_);
  return std::max(0.0, (vv - c * xv * xv) / a_);
}

Vector LocalNormContext::apply(std::span<const double> v) const {
  Vector out(v.size());
  if (kind_ == SetKind::Hypercube) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = diag_[i] * v[i];
    return out;
  }
  const double xv = dot(center_, v);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = a_ * v[i] + b_ * xv * center_[i];
  return out;
}

Vector LocalNormContext::apply_inverse(std::span<const double> v) const {
  Vector out(v.size());
  if (kind_ == SetKind::Hypercube) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / diag_[i];
    return out;
  }
  const double c = b_ / (a_ + b_ * center_sq_);
  const double xv = dot(center_, v);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - c * xv * center_[i]) / a_;
  return out;
}

// ---------------------------------------------------------------------------
// ActionSet

ActionSet::ActionSet(SetKind kind, std::size_t dimension) : kind_(kind), dim_(dimension) {
  if (dimension < 1) throw std::invalid_argument("action set dimension must be >= 1");
}

double ActionSet::barrier_parameter() const {
  return kind_ == SetKind::Hypercube ? static_cast<double>(dim_) : 1.0;
}

void ActionSet::check_dimension(std::span<const double> v, const char* what) const {
  if (v.size() != dim_) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(dim_) + ", got " + std::to_string(v.size()));
  }
}

bool ActionSet::is_interior(std::span<const double> x) const {
  if (kind_ == SetKind::Hypercube) {
    double m = 0.0;
    for (double xi : x) {
      if (!std::isfinite(xi)) return false;
      m = std::max(m, std::abs(xi));
    }
    return 1.0 - m >= kInteriorMargin;
  }
  const double n = std::sqrt(norm_sq(x));
  return std::isfinite(n) && 1.0 - n >= kInteriorMargin;
}

void ActionSet::require_interior(std::span<const double> x, const char* op) const {
  check_dimension(x, op);
  if (!is_interior(x)) {
    throw std::domain_error(std::string(op) + ": point is not strictly inside the " +
                            std::string(to_string(kind_)));
  }
}

Vector ActionSet::linear_minimizer(std::span<const double> direction) const {
  check_dimension(direction, "linear_minimizer");
  require_finite(direction, "linear_minimizer");
  Vector a(dim_);
  if (kind_ == SetKind::Hypercube) {
    for (std::size_t i = 0; i < dim_; ++i) a[i] = direction[i] > 0.0 ? -1.0 : 1.0;
    return a;
  }
  const double n = std::sqrt(norm_sq(direction));
  if (n == 0.0) {
    a[0] = 1.0;
    return a;
  }
  for (std::size_t i = 0; i < dim_; ++i) a[i] = -direction[i] / n;
  return a;
}

Vector ActionSet::support_gradient(std::span<const double> theta) const {
  check_dimension(theta, "support_gradient");
  require_finite(theta, "support_gradient");
  Vector a(dim_);
  if (kind_ == SetKind::Hypercube) {
    for (std::size_t i = 0; i < dim_; ++i) a[i] = theta[i] < 0.0 ? -1.0 : 1.0;
    return a;
  }
  const double n = std::sqrt(norm_sq(theta));
  if (n == 0.0) {
    a[0] = 1.0;
    return a;
  }
  for (std::size_t i = 0; i < dim_; ++i) a[i] = theta[i] / n;
  return a;
}

double ActionSet::support(std::span<const double> theta) const {
  check_dimension(theta, "support");
  if (kind_ == SetKind::Hypercube) {
    double s = 0.0;
    for (double t : theta) s += std::abs(t);
    return s;
  }
  return std::sqrt(norm_sq(theta));
}

double ActionSet::barrier_value(std::span<const double> x) const {
  require_interior(x, "barrier_value");
  if (kind_ == SetKind::Hypercube) {
    double r = 0.0;
    for (double xi : x) r -= std::log((1.0 - xi) * (1.0 + xi));
    return r;
  }
  return -std::log1p(-norm_sq(x));
}

Vector ActionSet::barrier_gradient(std::span<const double> x) const {
  require_interior(x, "barrier_gradient");
  Vector g(dim_);
  if (kind_ == SetKind::Hypercube) {
    for (std::size_t i = 0; i < dim_; ++i) g[i] = 2.0 * x[i] / ((1.0 - x[i]) * (1.0 + x[i]));
    return g;
  }
  const double gap = 1.0 - norm_sq(x);
  for (std::size_t i = 0; i < dim_; ++i) g[i] = 2.0 * x[i] / gap;
  return g;
}

LocalNormContext ActionSet::barrier_hessian(std::span<const double> x) const {
  require_interior(x, "barrier_hessian");
  if (kind_ == SetKind::Hypercube) {
    Vector diag(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      const double gap = (1.0 - x[i]) * (1.0 + x[i]);
      diag[i] = 2.0 * (1.0 + x[i] * x[i]) / (gap * gap);
    }
    return LocalNormContext::diagonal(Vector(x.begin(), x.end()), std::move(diag));
  }
  const double gap = 1.0 - norm_sq(x);
  return LocalNormContext::rank_one(Vector(x.begin(), x.end()), 2.0 / gap, 4.0 / (gap * gap));
}

Vector ActionSet::conjugate_gradient(std::span<const double> theta) const {
  check_dimension(theta, "conjugate_gradient");
  require_finite(theta, "conjugate_gradient");
  // (sqrt(1+t^2) - 1)/t == t/(1 + sqrt(1+t^2)), which has no cancellation at t -> 0.
  Vector x(dim_);
  if (kind_ == SetKind::Hypercube) {
    for (std::size_t i = 0; i < dim_; ++i) {
      x[i] = theta[i] / (1.0 + std::hypot(1.0, theta[i]));
    }
    return x;
  }
  const double scale = 1.0 / (1.0 + std::hypot(1.0, std::sqrt(norm_sq(theta))));
  for (std::size_t i = 0; i < dim_; ++i) x[i] = theta[i] * scale;
  return x;
}

double ActionSet::conjugate_value(std::span<const double> theta) const {
  check_dimension(theta, "conjugate_value");
  require_finite(theta, "conjugate_value");
  // With s = sqrt(1 + t^2): <x, theta> = t^2/(1+s) and 1 - |x|^2 = 2/(1+s).
  auto one_dim = [](double t_sq) {
    const double s = std::sqrt(1.0 + t_sq);
    return t_sq / (1.0 + s) + std::numbers::ln2 - std::log1p(s);
  };
  if (kind_ == SetKind::Hypercube) {
    double r = 0.0;
    for (double t : theta) r += one_dim(t * t);
    return r;
  }
  return one_dim(norm_sq(theta));
}

double ActionSet::minkowski_gauge(std::span<const double> center,
                                  std::span<const double> y) const {
  require_interior(center, "minkowski_gauge");
  check_dimension(y, "minkowski_gauge");
  if (kind_ == SetKind::Hypercube) {
    double g = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double v = y[i] - center[i];
      if (v > 0.0) g = std::max(g, v / (1.0 - center[i]));
      else if (v < 0.0) g = std::max(g, -v / (1.0 + center[i]));
    }
    return g;
  }
  // Largest s with ||center + s v|| = 1, then t = 1/s (written without cancellation).
  Vector v(dim_);
  for (std::size_t i = 0; i < dim_; ++i) v[i] = y[i] - center[i];
  const double vv = norm_sq(v);
  if (vv == 0.0) return 0.0;
  const double xv = dot(center, v);
  const double gap = 1.0 - norm_sq(center);
  return (xv + std::sqrt(xv * xv + vv * gap)) / gap;
}

}  // namespace scftpl
