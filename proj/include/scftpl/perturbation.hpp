#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>

#include "scftpl/action_set.hpp"
#include "scftpl/rng.hpp"

namespace scftpl {

// --- Hypercube: independent coordinates with density f(t) = (sqrt(1+t^2)-1)/(2 t^2 sqrt(1+t^2)).

double hypercube_marginal_density(double t);
/// F(t) = 1/2 + (sqrt(1+t^2) - 1)/(2t).
double hypercube_marginal_cdf(double t);
/// F^{-1}(u) = (1 - 2u)/(2u(u - 1)) for u in (0, 1).
double hypercube_inverse_cdf(double u);

// --- Ball: spherically symmetric density
//   f(x) = Gamma(d+1/2) / (2 pi^{d/2} Gamma((d+1)/2)) * int_0^1 t^{(d-1)/2} (1 + t|x|^2)^{-d-1/2} dt.

/// Radial profile f~(r) with f(x) = f~(|x|).
double ball_radial_profile(double r, std::size_t d);
double ball_density(std::span<const double> x);
/// Density of the radius V = |xi|: p_V(s) = S_{d-1} f~(s) s^{d-1}.
double ball_radius_density(double s, std::size_t d);
/// ln S_{d-1}, the log surface area of the unit sphere in R^d.
double log_sphere_area(std::size_t d);

struct RadialTableSpec {
  std::size_t nodes = 4096;
  double tail_mass = 1e-6;   // 1 - CDF(s_max) is at most half of this
  double head_mass = 1e-12;  // target CDF at the first node
};

/// Monotone table of (s, P(V <= s)) on log-spaced nodes for inverse-CDF sampling of the
/// ball radius. Values between nodes use a cubic Hermite interpolant in ln s with
/// the exact density as slope.
class RadialTable {
 public:
  static RadialTable build(std::size_t d, const RadialTableSpec& spec = {});

  /// Binary cache: u64 d, f64 s_max, u64 node_count, then node_count (s, cdf) f64 pairs,
  /// all little-endian.
  void save(const std::filesystem::path& path) const;
  static RadialTable load(const std::filesystem::path& path);
  static std::filesystem::path cache_name(std::size_t d, double s_max, std::size_t nodes);
  /// Loads `dir/cache_name(...)` when present, otherwise builds and writes it.
  static RadialTable load_or_build(const std::filesystem::path& dir, std::size_t d,
                                   const RadialTableSpec& spec = {});

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return radii_.size(); }
  double s_min() const { return radii_.front(); }
  double s_max() const { return radii_.back(); }
  std::span<const double> radii() const { return radii_; }
  std::span<const double> cdf_values() const { return cdf_; }

  double cdf(double s) const;
  double quantile(double u) const;

 private:
  RadialTable() = default;
  void finish();  // fills log radii and slopes from radii_/cdf_

  std::size_t dim_ = 0;
  Vector radii_, cdf_;
  Vector log_radii_, slopes_;  // slopes_ = dCDF/d ln s at nodes
  double tail_coeff_ = 0.0;    // 1 - CDF(s) ~ tail_coeff_ / s beyond s_max
};

/// A self-concordant perturbation for a given action set. Immutable once built.
class PerturbationSampler {
 public:
  /// Builds the radial table for a ball; hypercubes need no precomputation.
  explicit PerturbationSampler(const ActionSet& set, const RadialTableSpec& spec = {});
  PerturbationSampler(const ActionSet& set, std::shared_ptr<const RadialTable> table);

  const ActionSet& set() const { return set_; }
  const RadialTable* radial_table() const { return table_.get(); }
  std::shared_ptr<const RadialTable> shared_table() const { return table_; }

  /// Copy that draws scale * xi instead of xi (used for mutation testing of the verifier).
  PerturbationSampler with_scale(double scale) const;
  double scale() const { return scale_; }

  void sample_into(CounterRng& rng, std::span<double> out) const;
  Vector sample(CounterRng& rng) const;

 private:
  ActionSet set_;
  std::shared_ptr<const RadialTable> table_;
  double scale_ = 1.0;
};

/// d i.i.d. draws of F^{-1}(U).
Vector sample_hypercube(const ActionSet& set, CounterRng& rng);
/// U * V with U = N/|N| (Box-Muller normals) and V from the radial table.
Vector sample_ball(const PerturbationSampler& sampler, CounterRng& rng);

struct ReplicationReport {
  Vector mc_mean;
  Vector target;
  Vector stderr_;
  std::size_t samples = 0;

  /// Largest |mc_mean - target| / stderr over coordinates with nonzero stderr.
  double max_abs_z() const;
  /// Sum of squared z-scores and the number of terms in it.
  double chi_square() const;
  std::size_t degrees_of_freedom() const;
};

/// Monte-Carlo check of grad R*(theta) = E[grad phi_K(theta + xi)].
ReplicationReport verify_replication(const ActionSet& set, const PerturbationSampler& sampler,
                                     std::span<const double> theta, std::size_t n_samples,
                                     CounterRng& rng);

}  // namespace scftpl
