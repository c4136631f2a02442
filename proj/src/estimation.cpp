#include "scftpl/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "scftpl/errors.hpp"
#include "scftpl/quadrature.hpp"

namespace scftpl {

// --- K(x) -----------------------------------------------------------------------------
//
// Writing xi = X / sigma with sigma ~ U(0,1) and X of density proportional to
// (1 + |y|^2)^{-d-1/2}, the direction of theta + xi is that of sigma*theta + X. Averaging
// sin^2 of its angle to theta over sigma in closed form leaves
//   K(x) = E_Z[ J(x/Z) / (x/Z) ],
//   J(a) = (1/I_{d-2}) int_0^pi sin^{d-1}(phi) atan2(a sin phi, 1 + a cos phi) dphi,
// with Z = |X| of density 2 z^{d-1} (1+z^2)^{-d-1/2} / B(d/2, (d+1)/2) and
// I_n = int_0^pi sin^n.

namespace {

constexpr double kInnerTol = 1e-10;
constexpr double kOuterTol = 1e-9;

double log_sine_integral(double n) {
  return 0.5 * std::log(std::numbers::pi) + std::lgamma(0.5 * (n + 1.0)) -
         std::lgamma(0.5 * n + 1.0);
}

// J(a)/a, continuous at a = 0 where it tends to E[sin phi].
double angular_mean(double a, std::size_t d, double log_norm, const std::vector<double>& cuts) {
  const double p = static_cast<double>(d) - 1.0;
  auto f = [&](double phi) {
    const double s = std::sin(phi);
    if (s <= 0.0) return 0.0;
    const double w = std::exp(p * std::log(s) - log_norm);
    const double ang = a > 0.0 ? std::atan2(a * s, 1.0 + a * std::cos(phi)) / a : s;
    return w * ang;
  };
  return integrate(f, 0.0, std::numbers::pi, cuts, kInnerTol).value;
}

}  // namespace

double k_function_ball(double x, std::size_t d) {
  if (d < 2) throw std::invalid_argument("k_function_ball: d must be at least 2");
  if (!(x >= 0.0) || std::isinf(x)) throw std::domain_error("k_function_ball: x must be >= 0");
  const double dd = static_cast<double>(d);
  if (x == 0.0) return (dd - 1.0) / dd;

  const double log_norm = log_sine_integral(dd - 2.0);
  const double log_g0 = std::numbers::ln2 -
                        (std::lgamma(0.5 * dd) + std::lgamma(0.5 * (dd + 1.0)) -
                         std::lgamma(dd + 0.5));
  const double spread = 1.0 / std::sqrt(dd);

  // The angular weight concentrates near pi/2 with width ~ d^{-1/2}.
  std::vector<double> phi_cuts;
  if (d > 16)
    for (double k : {-8.0, -3.0, 0.0, 3.0, 8.0})
      phi_cuts.push_back(0.5 * std::numbers::pi + k * spread);

  auto integrand = [&](double z) {
    if (z <= 0.0) return 0.0;
    const double lg = log_g0 + (dd - 1.0) * std::log(z) - (dd + 0.5) * std::log1p(z * z);
    const double g = std::exp(lg);
    if (g == 0.0) return 0.0;
    return g * angular_mean(x / z, d, log_norm, phi_cuts);
  };

  // The radius density peaks near 1 with width ~ d^{-1/2}; the angular factor has a
  // kink in z at z = x.
  const double z_hi = 1.0 + 12.0 * spread;
  std::vector<double> cuts{x, 1.0};
  for (double k : {-6.0, -2.0, 2.0, 6.0}) cuts.push_back(1.0 + k * spread);
  const double head = integrate(integrand, 0.0, z_hi, cuts, kOuterTol, 24).value;
  const double tail = integrate_to_infinity(integrand, z_hi, kOuterTol, 24, 1e-14).value;
  const double k = head + tail;
  if (!(k > 0.0 && k < 1.0))
    throw NumericError("k_function_ball: value outside (0, 1) at x = " + std::to_string(x));
  return k;
}

KFunction::KFunction(std::size_t d, std::size_t grid_nodes, double w_max)
    : dim_(d), n_(grid_nodes), w_max_(w_max) {
  if (d < 2) throw std::invalid_argument("KFunction: d must be at least 2");
  if (grid_nodes < 8) throw std::invalid_argument("KFunction: need at least 8 grid nodes");
  if (!(w_max > 0.0 && w_max < 1.0)) throw std::invalid_argument("KFunction: w_max in (0,1)");
  h_ = w_max_ / static_cast<double>(n_ - 1);
  cache_ = std::make_unique<std::atomic<double>[]>(n_);
  for (std::size_t j = 0; j < n_; ++j)
    cache_[j].store(std::numeric_limits<double>::quiet_NaN(), std::memory_order_relaxed);
}

std::shared_ptr<const KFunction> KFunction::shared(std::size_t d) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const KFunction>> registry;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = registry[d];
  if (!slot) slot = std::make_shared<const KFunction>(d);
  return slot;
}

double KFunction::exact(double x) const { return k_function_ball(x, dim_); }

double KFunction::node(std::size_t j) const {
  double v = cache_[j].load(std::memory_order_acquire);
  if (std::isnan(v)) {
    const double w = h_ * static_cast<double>(j);
    v = k_function_ball(w / (1.0 - w), dim_);
    cache_[j].store(v, std::memory_order_release);
  }
  return v;
}

std::size_t KFunction::nodes_computed() const {
  std::size_t c = 0;
  for (std::size_t j = 0; j < n_; ++j) c += !std::isnan(cache_[j].load(std::memory_order_relaxed));
  return c;
}

double KFunction::operator()(double x) const {
  if (!(x >= 0.0) || std::isinf(x)) throw std::domain_error("KFunction: x must be >= 0");
  const double dd = static_cast<double>(dim_);
  if (x == 0.0) return (dd - 1.0) / dd;
  const double w = x / (1.0 + x);
  if (w > w_max_) return exact(x);
  const double u = w / h_;
  const auto j = static_cast<std::size_t>(u);
  const std::size_t s = std::min(j > 0 ? j - 1 : 0, n_ - 4);
  double result = 0.0;
  // Lagrange weights on the nodes s..s+3 in the scaled coordinate u.
  const double t0 = u - static_cast<double>(s);
  const double t[4] = {t0, t0 - 1.0, t0 - 2.0, t0 - 3.0};
  const double wts[4] = {-t[1] * t[2] * t[3] / 6.0, t[0] * t[2] * t[3] / 2.0,
                         -t[0] * t[1] * t[3] / 2.0, t[0] * t[1] * t[2] / 6.0};
  for (std::size_t a = 0; a < 4; ++a) result += wts[a] * node(s + a);
  return result;
}

// --- covariance models ------------------------------------------------------------------

CovarianceModel covariance_hypercube(std::span<const double> x) {
  CovarianceModel m;
  m.kind = SetKind::Hypercube;
  m.x.assign(x.begin(), x.end());
  m.gap.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double g = (1.0 - x[i]) * (1.0 + x[i]);
    if (!(g >= kCovarianceGapFloor))
      throw std::domain_error("covariance_hypercube: x too close to the boundary (1 - x_i^2 = " +
                              std::to_string(g) + ")");
    m.gap[i] = g;
    m.alpha += x[i] * x[i] / g;
  }
  return m;
}

CovarianceModel covariance_ball(std::span<const double> theta, double k) {
  CovarianceModel m;
  m.kind = SetKind::EuclideanBall;
  m.theta.assign(theta.begin(), theta.end());
  m.theta_sq = norm_sq(theta);
  m.k = k;
  if (theta.size() >= 2 && !(k > 0.0 && k < 1.0))
    throw std::logic_error("covariance_ball: k outside (0, 1)");
  return m;
}

CovarianceModel covariance_ball(std::span<const double> theta, const KFunction& K) {
  if (K.dimension() != theta.size())
    throw std::invalid_argument("covariance_ball: K dimension mismatch");
  return covariance_ball(theta, K(std::sqrt(norm_sq(theta))));
}

Vector apply_qinv_hypercube(const CovarianceModel& m, std::span<const double> A) {
  if (m.kind != SetKind::Hypercube) throw std::invalid_argument("apply_qinv_hypercube: wrong kind");
  const std::size_t d = m.x.size();
  if (A.size() != d) throw std::invalid_argument("apply_qinv_hypercube: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += m.x[i] * A[i] / m.gap[i];
  const double c = -s / (1.0 + m.alpha);
  Vector out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = (c * m.x[i] + A[i]) / m.gap[i];
  return out;
}

Vector apply_qinv_ball(const CovarianceModel& m, std::span<const double> A) {
  if (m.kind != SetKind::EuclideanBall) throw std::invalid_argument("apply_qinv_ball: wrong kind");
  const std::size_t d = m.theta.size();
  if (A.size() != d) throw std::invalid_argument("apply_qinv_ball: dimension mismatch");
  Vector out(A.begin(), A.end());
  if (d == 1) return out;
  const double dd = static_cast<double>(d);
  if (m.theta_sq == 0.0) {
    for (auto& v : out) v *= dd;
    return out;
  }
  if (!(m.k > 0.0 && m.k < 1.0)) throw std::logic_error("apply_qinv_ball: k outside (0, 1)");
  const double perp = (dd - 1.0) / m.k;
  const double c = (1.0 / (1.0 - m.k) - perp) * dot(m.theta, A) / m.theta_sq;
  for (std::size_t i = 0; i < d; ++i) out[i] = perp * A[i] + c * m.theta[i];
  return out;
}

Vector apply_qinv(const CovarianceModel& m, std::span<const double> A) {
  return m.kind == SetKind::Hypercube ? apply_qinv_hypercube(m, A) : apply_qinv_ball(m, A);
}

Vector apply_q(const CovarianceModel& m, std::span<const double> v) {
  const std::size_t d = m.dimension();
  if (v.size() != d) throw std::invalid_argument("apply_q: dimension mismatch");
  Vector out(d);
  if (m.kind == SetKind::Hypercube) {
    const double xv = dot(m.x, v);
    for (std::size_t i = 0; i < d; ++i) out[i] = m.x[i] * xv + m.gap[i] * v[i];
    return out;
  }
  if (d == 1) return Vector(v.begin(), v.end());
  const double dd = static_cast<double>(d);
  if (m.theta_sq == 0.0) {
    for (std::size_t i = 0; i < d; ++i) out[i] = v[i] / dd;
    return out;
  }
  const double perp = m.k / (dd - 1.0);
  const double c = (1.0 - m.k - perp) * dot(m.theta, v) / m.theta_sq;
  for (std::size_t i = 0; i < d; ++i) out[i] = perp * v[i] + c * m.theta[i];
  return out;
}

Vector estimate_loss(const CovarianceModel& m, std::span<const double> A, double observed_loss) {
  if (!(std::abs(observed_loss) <= 1.0 + 1e-9))
    throw std::invalid_argument("estimate_loss: |observed_loss| exceeds 1");
  Vector out = apply_qinv(m, A);
  for (auto& v : out) v *= observed_loss;
  return out;
}

// --- SCRiBLe -------------------------------------------------------------------------------

double hessian_eigenpair(const LocalNormContext& H, std::size_t i, std::span<double> v) {
  const std::size_t d = H.center().size();
  if (i >= d || v.size() != d) throw std::invalid_argument("hessian_eigenpair: bad index or size");
  std::fill(v.begin(), v.end(), 0.0);
  if (H.kind() == SetKind::Hypercube) {
    v[i] = 1.0;
    return H.diag()[i];
  }
  const Vector& x = H.center();
  const double xx = norm_sq(x);
  const double a = H.scale(), b = H.rank_one_coeff();
  if (xx == 0.0) {
    v[i] = 1.0;
    return a;
  }
  // Householder reflection mapping e_1 to x/|x|; its columns are an orthonormal eigenbasis.
  const double n = std::sqrt(xx);
  Vector w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = -x[j] / n;
  w[0] += 1.0;
  const double ww = norm_sq(w);
  v[i] = 1.0;
  if (ww > 0.0) {
    const double c = 2.0 * w[i] / ww;
    for (std::size_t j = 0; j < d; ++j) v[j] -= c * w[j];
  }
  return i == 0 ? a + b * xx : a;
}

Vector dikin_pole(const LocalNormContext& H, std::size_t i, int sign) {
  const std::size_t d = H.center().size();
  Vector v(d);
  const double lambda = hessian_eigenpair(H, i, v);
  const double step = (sign >= 0 ? 1.0 : -1.0) / std::sqrt(lambda);
  Vector pole(H.center());
  for (std::size_t j = 0; j < d; ++j) pole[j] += step * v[j];
  return pole;
}

Vector scribble_estimate(const ActionSet& set, std::span<const double> x,
                         std::span<const double> A, double observed_loss) {
  const std::size_t d = set.dimension();
  if (A.size() != d) throw std::invalid_argument("scribble_estimate: dimension mismatch");
  const LocalNormContext H = set.barrier_hessian(x);
  Vector diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = A[i] - x[i];
  Vector out = H.apply(diff);
  const double f = static_cast<double>(d) * observed_loss;
  for (auto& v : out) v *= f;
  return out;
}

double local_norm_sq(const LocalNormContext& context, std::span<const double> v, bool inverse) {
  return context.norm_sq(v, inverse);
}

// --- Monte-Carlo Q ---------------------------------------------------------------------------

MonteCarloQ monte_carlo_q(const ActionSet& set, const PerturbationSampler& sampler,
                          std::span<const double> theta, std::size_t n_samples,
                          CounterRng& rng) {
  const std::size_t d = set.dimension();
  if (theta.size() != d) throw std::invalid_argument("monte_carlo_q: dimension mismatch");
  if (n_samples < 2) throw std::invalid_argument("monte_carlo_q: need at least 2 samples");
  std::vector<long double> sum(d * d, 0.0L), sum_sq(d * d, 0.0L);
  Vector xi(d), shifted(d);
  for (std::size_t k = 0; k < n_samples; ++k) {
    sampler.sample_into(rng, xi);
    for (std::size_t i = 0; i < d; ++i) shifted[i] = theta[i] + xi[i];
    const Vector A = set.support_gradient(shifted);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double p = A[i] * A[j];
        sum[i * d + j] += p;
        sum_sq[i * d + j] += static_cast<long double>(p) * p;
      }
  }
  MonteCarloQ q;
  q.d = d;
  q.mean.resize(d * d);
  q.stderr_.resize(d * d);
  const long double n = static_cast<long double>(n_samples);
  for (std::size_t e = 0; e < d * d; ++e) {
    const long double mean = sum[e] / n;
    long double var = (sum_sq[e] - n * mean * mean) / (n - 1);
    if (var < 0) var = 0;
    q.mean[e] = static_cast<double>(mean);
    q.stderr_[e] = static_cast<double>(std::sqrt(var / n));
  }
  return q;
}

}  // namespace scftpl
