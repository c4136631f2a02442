#include "scftpl/perturbation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "scftpl/errors.hpp"
#include "scftpl/quadrature.hpp"

namespace scftpl {

double hypercube_marginal_density(double t) {
  const double s = std::hypot(1.0, t);
  return 0.5 / (s * (s + 1.0));
}

double hypercube_marginal_cdf(double t) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return 0.5 + t / (2.0 * (1.0 + std::hypot(1.0, t)));
}

double hypercube_inverse_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("hypercube_inverse_cdf: u outside (0, 1)");
  return (1.0 - 2.0 * u) / (2.0 * u * (u - 1.0));
}

namespace {

constexpr double kInnerTol = 1e-12;

double log_profile_constant(std::size_t d) {
  const double dd = static_cast<double>(d);
  return std::lgamma(dd + 0.5) - std::numbers::ln2 - 0.5 * dd * std::log(std::numbers::pi) -
         std::lgamma(0.5 * (dd + 1.0));
}

// exp(log_scale) * int_0^1 t^{(d-1)/2} (1 + t r^2)^{-d-1/2} dt, with every factor kept
// in the exponent. Substituting t = sigma^2 (r <= 1), or splitting at t = 1/r^2 and
// rescaling each piece (r > 1), keeps the integrands bounded and smooth for all d.
double scaled_profile(double r, std::size_t d, double log_scale) {
  const double dd = static_cast<double>(d);
  const double p = dd + 0.5;
  if (r <= 1.0) {
    const double r2 = r * r;
    auto g = [&](double s) {
      if (s <= 0.0) return 0.0;
      return 2.0 * std::exp(log_scale + dd * std::log(s) - p * std::log1p(s * s * r2));
    };
    return integrate(g, 0.0, 1.0, kInnerTol).value;
  }
  const double shift = log_scale - (dd + 1.0) * std::log(r);
  auto head = [&](double u) {
    if (u <= 0.0) return 0.0;
    return 2.0 * std::exp(shift + dd * std::log(u) - p * std::log1p(u * u));
  };
  auto tail = [&](double v) {
    return 2.0 * std::exp(shift + (dd - 1.0) * std::log(v) - p * std::log1p(v * v));
  };
  return integrate(head, 0.0, 1.0, kInnerTol).value +
         integrate(tail, 1.0 / r, 1.0, kInnerTol).value;
}

}  // namespace

double log_sphere_area(std::size_t d) {
  const double dd = static_cast<double>(d);
  return std::numbers::ln2 + 0.5 * dd * std::log(std::numbers::pi) - std::lgamma(0.5 * dd);
}

double ball_radial_profile(double r, std::size_t d) {
  if (d == 0) throw std::invalid_argument("ball_radial_profile: d must be positive");
  if (!(r >= 0.0) || std::isinf(r)) throw std::domain_error("ball_radial_profile: bad radius");
  return scaled_profile(r, d, log_profile_constant(d));
}

double ball_density(std::span<const double> x) {
  return ball_radial_profile(std::sqrt(norm_sq(x)), x.size());
}

double ball_radius_density(double s, std::size_t d) {
  if (d == 0) throw std::invalid_argument("ball_radius_density: d must be positive");
  if (!(s >= 0.0) || std::isinf(s)) throw std::domain_error("ball_radius_density: bad radius");
  double log_scale = log_profile_constant(d) + log_sphere_area(d);
  if (d > 1) {
    if (s == 0.0) return 0.0;
    log_scale += (static_cast<double>(d) - 1.0) * std::log(s);
  }
  return scaled_profile(s, d, log_scale);
}

// --- samplers -------------------------------------------------------------------------

PerturbationSampler::PerturbationSampler(const ActionSet& set, const RadialTableSpec& spec)
    : set_(set) {
  if (set.kind() == SetKind::EuclideanBall)
    table_ = std::make_shared<const RadialTable>(RadialTable::build(set.dimension(), spec));
}

PerturbationSampler::PerturbationSampler(const ActionSet& set,
                                         std::shared_ptr<const RadialTable> table)
    : set_(set), table_(std::move(table)) {
  if (table_ && set.kind() == SetKind::EuclideanBall && table_->dimension() != set.dimension())
    throw std::invalid_argument("PerturbationSampler: radial table dimension mismatch");
}

PerturbationSampler PerturbationSampler::with_scale(double scale) const {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("PerturbationSampler: scale must be positive");
  PerturbationSampler copy = *this;
  copy.scale_ = scale;
  return copy;
}

void PerturbationSampler::sample_into(CounterRng& rng, std::span<double> out) const {
  const std::size_t d = set_.dimension();
  if (out.size() != d) throw std::invalid_argument("sample_into: output size mismatch");
  if (set_.kind() == SetKind::Hypercube) {
    for (auto& v : out) v = scale_ * hypercube_inverse_cdf(rng.uniform());
    return;
  }
  if (!table_) throw std::logic_error("sample_ball: radial table missing");
  double sq = 0.0;
  do {
    sq = 0.0;
    for (std::size_t i = 0; i < d; i += 2) {
      auto [a, b] = rng.normal_pair();
      out[i] = a;
      sq += a * a;
      if (i + 1 < d) {
        out[i + 1] = b;
        sq += b * b;
      }
    }
  } while (sq == 0.0);
  const double radius = scale_ * table_->quantile(rng.uniform());
  const double f = radius / std::sqrt(sq);
  for (auto& v : out) v *= f;
}

Vector PerturbationSampler::sample(CounterRng& rng) const {
  Vector out(set_.dimension());
  sample_into(rng, out);
  return out;
}

Vector sample_hypercube(const ActionSet& set, CounterRng& rng) {
  if (set.kind() != SetKind::Hypercube)
    throw std::invalid_argument("sample_hypercube: not a hypercube");
  Vector out(set.dimension());
  for (auto& v : out) v = hypercube_inverse_cdf(rng.uniform());
  return out;
}

Vector sample_ball(const PerturbationSampler& sampler, CounterRng& rng) {
  if (sampler.set().kind() != SetKind::EuclideanBall)
    throw std::invalid_argument("sample_ball: not a ball");
  return sampler.sample(rng);
}

// --- replication check ---------------------------------------------------------------

double ReplicationReport::max_abs_z() const {
  double m = 0.0;
  for (std::size_t i = 0; i < mc_mean.size(); ++i)
    if (stderr_[i] > 0.0) m = std::max(m, std::abs(mc_mean[i] - target[i]) / stderr_[i]);
  return m;
}

double ReplicationReport::chi_square() const {
  double c = 0.0;
  for (std::size_t i = 0; i < mc_mean.size(); ++i)
    if (stderr_[i] > 0.0) {
      const double z = (mc_mean[i] - target[i]) / stderr_[i];
      c += z * z;
    }
  return c;
}

std::size_t ReplicationReport::degrees_of_freedom() const {
  std::size_t k = 0;
  for (double s : stderr_) k += s > 0.0;
  return k;
}

ReplicationReport verify_replication(const ActionSet& set, const PerturbationSampler& sampler,
                                     std::span<const double> theta, std::size_t n_samples,
                                     CounterRng& rng) {
  const std::size_t d = set.dimension();
  if (theta.size() != d) throw std::invalid_argument("verify_replication: dimension mismatch");
  if (n_samples < 2) throw std::invalid_argument("verify_replication: need at least 2 samples");

  ReplicationReport rep;
  rep.samples = n_samples;
  rep.target = set.conjugate_gradient(theta);
  std::vector<long double> sum(d, 0.0L), sum_sq(d, 0.0L);
  Vector xi(d), shifted(d);
  for (std::size_t k = 0; k < n_samples; ++k) {
    sampler.sample_into(rng, xi);
    for (std::size_t i = 0; i < d; ++i) shifted[i] = theta[i] + xi[i];
    const Vector g = set.support_gradient(shifted);
    for (std::size_t i = 0; i < d; ++i) {
      sum[i] += g[i];
      sum_sq[i] += static_cast<long double>(g[i]) * g[i];
    }
  }
  const long double n = static_cast<long double>(n_samples);
  rep.mc_mean.resize(d);
  rep.stderr_.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    const long double mean = sum[i] / n;
    long double var = (sum_sq[i] - n * mean * mean) / (n - 1);
    if (var < 0) var = 0;
    rep.mc_mean[i] = static_cast<double>(mean);
    rep.stderr_[i] = static_cast<double>(std::sqrt(var / n));
  }
  return rep;
}

}  // namespace scftpl
