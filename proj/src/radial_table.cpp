#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

#include "scftpl/errors.hpp"
#include "scftpl/perturbation.hpp"
#include "scftpl/quadrature.hpp"

namespace scftpl {

namespace {

constexpr double kSmallestRadius = 1e-8;

// P(V <= s) by adaptive quadrature from 0; only used near the lower end.
double radius_cdf_direct(double s, std::size_t d) {
  return integrate([d](double r) { return ball_radius_density(r, d); }, 0.0, s, 1e-10, 30,
                   1e-300)
      .value;
}

double find_s_min(std::size_t d, double head_mass) {
  if (radius_cdf_direct(kSmallestRadius, d) >= head_mass) return kSmallestRadius;
  double lo = std::log(kSmallestRadius), hi = 0.0;
  while (radius_cdf_direct(std::exp(hi), d) < head_mass) hi += 1.0;
  for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
    const double mid = 0.5 * (lo + hi);
    (radius_cdf_direct(std::exp(mid), d) < head_mass ? lo : hi) = mid;
  }
  return std::exp(lo);
}

template <class T>
void put_le(std::ostream& os, T v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

template <class T>
T get_le(std::istream& is) {
  unsigned char buf[8];
  if (!is.read(reinterpret_cast<char*>(buf), 8))
    throw std::runtime_error("radial table cache: truncated file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  return std::bit_cast<T>(bits);
}

struct Hermite {
  double c0, c1, m0, m1;  // values and slopes scaled by the interval width
  double value(double t) const {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * c0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * c1 +
           (t3 - t2) * m1;
  }
  double slope(double t) const {
    const double t2 = t * t;
    return (6 * t2 - 6 * t) * (c0 - c1) + (3 * t2 - 4 * t + 1) * m0 + (3 * t2 - 2 * t) * m1;
  }
};

}  // namespace

RadialTable RadialTable::build(std::size_t d, const RadialTableSpec& spec) {
  if (d == 0) throw std::invalid_argument("RadialTable: d must be positive");
  if (spec.nodes < 16) throw std::invalid_argument("RadialTable: need at least 16 nodes");
  if (!(spec.tail_mass > 0.0 && spec.tail_mass < 0.5))
    throw std::invalid_argument("RadialTable: tail_mass must lie in (0, 0.5)");
  if (!(spec.head_mass > 0.0 && spec.head_mass < spec.tail_mass))
    throw std::invalid_argument("RadialTable: head_mass must lie in (0, tail_mass)");

  // P(V > s) <= E|Z|/s = 1/s, so s_max = 2/tail_mass leaves at most tail_mass/2 outside.
  const double s_max = 2.0 / spec.tail_mass;
  const double s_min = find_s_min(d, spec.head_mass);
  const double x0 = std::log(s_min), x1 = std::log(s_max);
  const double h = (x1 - x0) / static_cast<double>(spec.nodes - 1);

  RadialTable t;
  t.dim_ = d;
  t.radii_.resize(spec.nodes);
  t.cdf_.resize(spec.nodes);
  auto in_log = [d](double x) {
    const double s = std::exp(x);
    return ball_radius_density(s, d) * s;
  };
  t.cdf_[0] = radius_cdf_direct(s_min, d);
  t.radii_[0] = s_min;
  for (std::size_t k = 1; k < spec.nodes; ++k) {
    const double a = x0 + h * static_cast<double>(k - 1);
    const double b = k + 1 == spec.nodes ? x1 : x0 + h * static_cast<double>(k);
    t.radii_[k] = k + 1 == spec.nodes ? s_max : std::exp(b);
    t.cdf_[k] = t.cdf_[k - 1] + kronrod15(in_log, a, b);
  }
  t.finish();
  return t;
}

void RadialTable::finish() {
  const std::size_t n = radii_.size();
  log_radii_.resize(n);
  slopes_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && !(radii_[k] > radii_[k - 1] && cdf_[k] > cdf_[k - 1]))
      throw NumericError(fmt::format("radial table not strictly increasing at node {}", k));
    log_radii_[k] = std::log(radii_[k]);
    slopes_[k] = ball_radius_density(radii_[k], dim_) * radii_[k];
  }
  if (!(cdf_.back() < 1.0) || !(cdf_.front() > 0.0))
    throw NumericError(fmt::format("radial table CDF range [{}, {}] is invalid", cdf_.front(),
                                   cdf_.back()));
  tail_coeff_ = (1.0 - cdf_.back()) * radii_.back();
}

double RadialTable::cdf(double s) const {
  if (!(s > 0.0)) return 0.0;
  if (s >= radii_.back()) return 1.0 - tail_coeff_ / s;
  if (s <= radii_.front())
    return cdf_.front() * std::pow(s / radii_.front(), static_cast<double>(dim_));
  const double x = std::log(s);
  const std::size_t k =
      static_cast<std::size_t>(std::upper_bound(log_radii_.begin(), log_radii_.end(), x) -
                               log_radii_.begin()) - 1;
  const double h = log_radii_[k + 1] - log_radii_[k];
  const Hermite H{cdf_[k], cdf_[k + 1], h * slopes_[k], h * slopes_[k + 1]};
  return H.value(std::clamp((x - log_radii_[k]) / h, 0.0, 1.0));
}

double RadialTable::quantile(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("RadialTable::quantile: u outside (0, 1)");
  if (u >= cdf_.back()) return tail_coeff_ / (1.0 - u);
  if (u <= cdf_.front())
    return radii_.front() * std::pow(u / cdf_.front(), 1.0 / static_cast<double>(dim_));
  const std::size_t k =
      static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin()) - 1;
  const double h = log_radii_[k + 1] - log_radii_[k];
  const Hermite H{cdf_[k], cdf_[k + 1], h * slopes_[k], h * slopes_[k + 1]};
  // Safeguarded Newton on the interpolant, bracketed in [0, 1].
  double lo = 0.0, hi = 1.0;
  double t = (u - cdf_[k]) / (cdf_[k + 1] - cdf_[k]);
  for (int it = 0; it < 20; ++it) {
    const double r = H.value(t) - u;
    (r < 0.0 ? lo : hi) = t;
    const double g = H.slope(t);
    double next = g > 0.0 ? t - r / g : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) < 1e-15) {
      t = next;
      break;
    }
    t = next;
  }
  return std::exp(log_radii_[k] + t * h);
}

void RadialTable::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write radial table cache " + path.string());
  put_le<std::uint64_t>(os, dim_);
  put_le<double>(os, s_max());
  put_le<std::uint64_t>(os, radii_.size());
  for (std::size_t k = 0; k < radii_.size(); ++k) {
    put_le<double>(os, radii_[k]);
    put_le<double>(os, cdf_[k]);
  }
  if (!os) throw std::runtime_error("failed writing radial table cache " + path.string());
}

RadialTable RadialTable::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open radial table cache " + path.string());
  RadialTable t;
  t.dim_ = get_le<std::uint64_t>(is);
  const double s_max = get_le<double>(is);
  const auto n = get_le<std::uint64_t>(is);
  if (t.dim_ == 0 || n < 2 || n > (std::uint64_t{1} << 26))
    throw std::runtime_error("radial table cache: bad header in " + path.string());
  t.radii_.resize(n);
  t.cdf_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    t.radii_[k] = get_le<double>(is);
    t.cdf_[k] = get_le<double>(is);
  }
  if (t.radii_.back() != s_max)
    throw std::runtime_error("radial table cache: s_max mismatch in " + path.string());
  t.finish();
  return t;
}

std::filesystem::path RadialTable::cache_name(std::size_t d, double s_max, std::size_t nodes) {
  return fmt::format("radial_d{}_smax{}_n{}.bin", d, s_max, nodes);
}

RadialTable RadialTable::load_or_build(const std::filesystem::path& dir, std::size_t d,
                                       const RadialTableSpec& spec) {
  const auto path = dir / cache_name(d, 2.0 / spec.tail_mass, spec.nodes);
  if (std::filesystem::exists(path)) {
    auto t = load(path);
    if (t.dimension() == d && t.size() == spec.nodes) return t;
  }
  auto t = build(d, spec);
  std::filesystem::create_directories(dir);
  t.save(path);
  return t;
}

}  // namespace scftpl
