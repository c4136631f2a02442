#include "scftpl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "scftpl/engine.hpp"
#include "scftpl/estimation.hpp"
#include "scftpl/experiment.hpp"
#include "scftpl/quadrature.hpp"

namespace scftpl {

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerifyReport::to_json() const {
  nlohmann::json j;
  j["passed"] = all_passed();
  auto& arr = j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"value", c.value},
                   {"threshold", c.threshold},
                   {"relation", c.relation},
                   {"verdict", c.passed ? "pass" : "fail"},
                   {"detail", c.detail}});
  }
  return j.dump(2) + "\n";
}

double chi_square_critical(double dof, double tail) {
  boost::math::chi_squared dist(dof);
  return boost::math::quantile(boost::math::complement(dist, tail));
}

double ball_radius_cdf_ibeta(double s, std::size_t d) {
  if (s <= 0.0) return 0.0;
  const double a = 0.5 * static_cast<double>(d), b = a + 0.5;
  auto f = [&](double u) {
    const double q = s * s * u * u;
    return boost::math::ibeta(a, b, q / (1.0 + q));
  };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 10, 1e-12);
}

namespace {

// Streams far above any round index, so check randomness never overlaps a run.
constexpr std::uint64_t kCheckStream = std::uint64_t{1} << 48;

CheckResult at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, "<=", value <= threshold, std::move(detail)};
}
CheckResult at_least(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, ">=", value >= threshold, std::move(detail)};
}

Vector random_theta(const ActionSet& set, CounterRng& rng, double max_norm) {
  const std::size_t d = set.dimension();
  Vector th(d);
  if (set.kind() == SetKind::Hypercube) {
    for (auto& v : th) v = max_norm * (2.0 * rng.uniform() - 1.0);
    return th;
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < d; i += 2) {
    auto [a, b] = rng.normal_pair();
    th[i] = a;
    sq += a * a;
    if (i + 1 < d) {
      th[i + 1] = b;
      sq += b * b;
    }
  }
  const double r = max_norm * rng.uniform() / std::sqrt(sq);
  for (auto& v : th) v *= r;
  return th;
}

Vector random_loss(const ActionSet& set, CounterRng& rng) {
  Vector y(set.dimension());
  for (std::size_t i = 0; i < y.size(); i += 2) {
    auto [a, b] = rng.normal_pair();
    y[i] = a;
    if (i + 1 < y.size()) y[i + 1] = b;
  }
  const double s = set.support(y);
  for (auto& v : y) v /= s;
  return y;
}

struct Moments {
  std::vector<long double> sum, sum_sq;
  std::size_t n = 0;
  explicit Moments(std::size_t d) : sum(d, 0.0L), sum_sq(d, 0.0L) {}
  void add(std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum[i] += v[i];
      sum_sq[i] += static_cast<long double>(v[i]) * v[i];
    }
    ++n;
  }
  double mean(std::size_t i) const { return static_cast<double>(sum[i] / n); }
  double se(std::size_t i) const {
    const long double m = sum[i] / n;
    long double var = (sum_sq[i] - n * m * m) / (n - 1);
    return var > 0 ? static_cast<double>(std::sqrt(var / n)) : 0.0;
  }
};

void density_checks(const ExperimentConfig& c, const PerturbationSampler* sampler,
                    std::vector<CheckResult>& out, CounterRng rng) {
  const std::size_t d = c.dimension;
  if (c.set == SetKind::Hypercube) {
    const double total = 2.0 * integrate_to_infinity(hypercube_marginal_density, 0.0, 1e-12).value;
    out.push_back(at_most("density.hypercube_normalization", std::abs(total - 1.0), 1e-8,
                          "|integral of the marginal density - 1|"));
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double u = 1e-6 + (1.0 - 2e-6) * k / 999.0;
      worst = std::max(worst, std::abs(hypercube_marginal_cdf(hypercube_inverse_cdf(u)) - u));
    }
    out.push_back(at_most("inverse_cdf.round_trip", worst, 1e-12,
                          "max |F(F^-1(u)) - u| on 1000 grid points"));
    return;
  }
  auto pv = [d](double s) { return ball_radius_density(s, d); };
  const double total =
      integrate(pv, 0.0, 1.0, 1e-12).value + integrate_to_infinity(pv, 1.0, 1e-12).value;
  out.push_back(at_most("density.ball_normalization", std::abs(total - 1.0), 1e-6,
                        "|integral of the radius density - 1|"));
  if (!sampler || !sampler->radial_table()) return;
  const RadialTable& table = *sampler->radial_table();
  out.push_back(at_least("radial_table.final_cdf", table.cdf_values().back(), 1.0 - 1e-6));
  // Kolmogorov-Smirnov distance of sampled radii against the incomplete-beta CDF,
  // evaluated every 100th order statistic (monotonicity bounds the gap by 100/n).
  const std::size_t n = 100000;
  std::vector<double> radii(n);
  Vector xi(d);
  for (auto& r : radii) {
    sampler->sample_into(rng, xi);
    r = std::sqrt(norm_sq(xi));
  }
  std::sort(radii.begin(), radii.end());
  double ks = 0.0;
  for (std::size_t i = 99; i < n; i += 100) {
    const double f = ball_radius_cdf_ibeta(radii[i], d);
    ks = std::max({ks, std::abs(static_cast<double>(i + 1) / n - f),
                   std::abs(f - static_cast<double>(i) / n)});
  }
  out.push_back(at_most("sampler.radius_ks_distance", ks + 100.0 / n, 0.01,
                        "KS distance of 1e5 sampled radii (upper estimate)"));
}

void replication_checks(const ExperimentConfig& c, const PerturbationSampler& sampler,
                        std::vector<CheckResult>& out, CounterRng rng) {
  const ActionSet set = c.action_set();
  double worst_z = 0.0, chi2 = 0.0, dof = 0.0;
  for (std::size_t k = 0; k < c.verify.thetas; ++k) {
    const Vector theta = random_theta(set, rng, 2.0);
    CounterRng draws = rng.split(kCheckStream + 1000 + k);
    const auto rep = verify_replication(set, sampler, theta, c.verify.samples, draws);
    worst_z = std::max(worst_z, rep.max_abs_z());
    chi2 += rep.chi_square();
    dof += static_cast<double>(rep.degrees_of_freedom());
  }
  out.push_back(at_most("replication.max_abs_z", worst_z, 4.0,
                        fmt::format("{} states x {} draws; |MC mean - grad R*| / SE",
                                    c.verify.thetas, c.verify.samples)));
  const double crit = dof > 0 ? chi_square_critical(dof, 1e-4) : 0.0;
  out.push_back(at_most("replication.chi_square", chi2, crit,
                        fmt::format("sum of squared z-scores, {} dof, p = 1e-4", dof)));
}

void covariance_checks(const ExperimentConfig& c, const PerturbationSampler* sampler,
                       std::vector<CheckResult>& out, CounterRng rng) {
  const ActionSet set = c.action_set();
  const std::size_t d = c.dimension;
  std::shared_ptr<const KFunction> K;
  if (set.kind() == SetKind::EuclideanBall && d >= 2) K = KFunction::shared(d);

  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector theta = random_theta(set, rng, 4.0);
    CovarianceModel m;
    Vector A(d);
    if (set.kind() == SetKind::Hypercube) {
      m = covariance_hypercube(set.conjugate_gradient(theta));
      for (auto& a : A) a = rng.uniform() < 0.5 ? -1.0 : 1.0;
    } else {
      m = d >= 2 ? covariance_ball(theta, *K) : covariance_ball(theta, 0.0);
      A = random_loss(set, rng);
    }
    const Vector back = apply_q(m, apply_qinv(m, A));
    double err = 0.0;
    for (std::size_t i = 0; i < d; ++i) err += (back[i] - A[i]) * (back[i] - A[i]);
    worst = std::max(worst, std::sqrt(err / norm_sq(A)));
  }
  out.push_back(at_most("covariance.inverse_residual", worst, 1e-8,
                        "max |Q Q^-1 A - A| / |A| over 1000 random states"));

  if (K) {
    const double dd = static_cast<double>(d);
    out.push_back(at_most("k_function.at_zero",
                          std::abs(k_function_ball(1e-9, d) - (dd - 1.0) / dd), 1e-5,
                          "quadrature near x = 0 against (d-1)/d"));
    double margin = std::numeric_limits<double>::infinity();
    for (double x : {0.0, 0.5, 1.0, 5.0, 50.0}) {
      const double k = (*K)(x);
      margin = std::min({margin, k - (dd - 1.0) / (dd * (x + 2.0)), (dd - 1.0) / dd - k});
    }
    out.push_back(at_least("k_function.bounds", margin, 0.0,
                           "min slack of (d-1)/(d(x+2)) <= K(x) <= (d-1)/d, x in {0,.5,1,5,50}"));
  }
  if (!sampler) return;
  // Monte-Carlo second moment of the played action.
  const Vector theta = random_theta(set, rng, 2.0);
  CounterRng draws = rng.split(kCheckStream + 7);
  const std::size_t n = c.verify.samples;
  if (set.kind() == SetKind::Hypercube) {
    // The Frobenius tolerance is absolute, so the draw count is not scaled down.
    const std::size_t n_fro = std::max<std::size_t>(n, 1000000);
    const auto q = monte_carlo_q(set, *sampler, theta, n_fro, draws);
    const auto m = covariance_hypercube(set.conjugate_gradient(theta));
    double fro = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double exact = m.x[i] * m.x[j] + (i == j ? m.gap[i] : 0.0);
        fro += (q.mean[i * d + j] - exact) * (q.mean[i * d + j] - exact);
      }
    out.push_back(at_most("covariance.monte_carlo_frobenius", std::sqrt(fro), 0.01,
                          fmt::format("|E[AA^T] (MC, {} draws) - Q|_F", n_fro)));
  } else if (K) {
    const double x = std::sqrt(norm_sq(theta));
    Moments mom(1);
    Vector xi(d), shifted(d);
    for (std::size_t s = 0; s < n; ++s) {
      sampler->sample_into(draws, xi);
      for (std::size_t i = 0; i < d; ++i) shifted[i] = theta[i] + xi[i];
      const Vector A = set.support_gradient(shifted);
      const double along = dot(A, theta) / x;
      const double v[1] = {1.0 - along * along};
      mom.add(v);
    }
    const double z = std::abs(mom.mean(0) - (*K)(x)) / mom.se(0);
    out.push_back(at_most("k_function.monte_carlo_z", z, 3.0,
                          fmt::format("|E[1 - <A, theta/|theta|>^2] - K(|theta|)| / SE, x = {:.4f}",
                                      x)));
  }
}

void estimator_checks(const ExperimentConfig& c, const PerturbationSampler* sampler,
                      std::vector<CheckResult>& out, CounterRng rng) {
  const ActionSet set = c.action_set();
  const std::size_t d = c.dimension;
  const double dd = static_cast<double>(d);
  const std::size_t n = c.verify.samples;
  const Vector y = random_loss(set, rng);

  if (sampler) {
    const Vector theta = random_theta(set, rng, set.kind() == SetKind::Hypercube ? 1.5 : 2.0);
    const Vector x = set.conjugate_gradient(theta);
    const LocalNormContext H = set.barrier_hessian(x);
    CovarianceModel m;
    if (set.kind() == SetKind::Hypercube) m = covariance_hypercube(x);
    else m = d >= 2 ? covariance_ball(theta, *KFunction::shared(d)) : covariance_ball(theta, 0.0);
    const double tn = std::sqrt(norm_sq(theta));
    Moments est(d), norm(2);
    double worst_ratio = 0.0;
    const double per_draw = set.kind() == SetKind::Hypercube ? 3.0 * dd : dd * dd * tn + 4.0 * dd * dd;
    CounterRng draws = rng.split(kCheckStream + 11);
    Vector xi(d), dir(d);
    for (std::size_t s = 0; s < n; ++s) {
      sampler->sample_into(draws, xi);
      for (std::size_t i = 0; i < d; ++i) dir[i] = -theta[i] - xi[i];
      const Vector A = set.linear_minimizer(dir);
      const Vector yh = estimate_loss(m, A, dot(y, A));
      est.add(yh);
      const double v[2] = {H.norm_sq(yh, true), norm_sq(yh)};
      norm.add(v);
      worst_ratio = std::max(worst_ratio, v[0] / per_draw);
    }
    double z = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      if (est.se(i) > 0) z = std::max(z, std::abs(est.mean(i) - y[i]) / est.se(i));
    out.push_back(at_most("unbiasedness.scftpl_max_z", z, 4.0,
                          fmt::format("|mean of y_hat - y| / SE over {} draws", n)));
    if (set.kind() == SetKind::Hypercube) {
      out.push_back(at_most("variance.scftpl_mean_local_norm", norm.mean(0),
                            dd / 2.0 + 3.0 * norm.se(0), "E|y_hat|_t^2 <= d/2 + 3 SE"));
      out.push_back(at_most("variance.scftpl_max_local_norm_ratio", worst_ratio, 1.0,
                            "max over draws of |y_hat|_t^2 / (3d)"));
    } else {
      out.push_back(at_most("variance.scftpl_mean_local_norm", norm.mean(0),
                            1.5 * dd * dd + 3.0 * norm.se(0), "E|y_hat|_t^2 <= 1.5 d^2 + 3 SE"));
      out.push_back(at_most("variance.scftpl_max_local_norm_ratio", worst_ratio, 1.0,
                            "max over draws of |y_hat|_t^2 / (d^2 |theta| + 4 d^2)"));
      out.push_back(at_most("variance.scftpl_mean_euclidean", norm.mean(1),
                            dd * dd * tn + 2.0 * dd * dd + 3.0 * norm.se(1),
                            "E|y_hat|^2 <= d^2 |theta| + 2 d^2 + 3 SE"));
    }
  }

  // SCRiBLe: uniform pole of the Dikin ellipsoid.
  const Vector theta = random_theta(set, rng, 1.5);
  const Vector x = set.conjugate_gradient(theta);
  const LocalNormContext H = set.barrier_hessian(x);
  Moments est(d);
  double worst_gauge = 0.0;
  CounterRng draws = rng.split(kCheckStream + 12);
  const Vector center(d, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto pick = draws.below(2 * d);
    const Vector A = dikin_pole(H, static_cast<std::size_t>(pick / 2), pick % 2 ? -1 : 1);
    if (s < 2 * d) worst_gauge = std::max(worst_gauge, set.minkowski_gauge(center, A));
    est.add(scribble_estimate(set, x, A, dot(y, A)));
  }
  double z = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    if (est.se(i) > 0) z = std::max(z, std::abs(est.mean(i) - y[i]) / est.se(i));
  out.push_back(at_most("unbiasedness.scribble_max_z", z, 4.0,
                        fmt::format("|mean of y_hat - y| / SE over {} draws", n)));
  double gauge = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (int sgn : {-1, 1}) gauge = std::max(gauge, set.minkowski_gauge(center, dikin_pole(H, i, sgn)));
  out.push_back(at_most("dikin.pole_gauge", gauge, 1.0, "max gauge of the 2d poles from the center"));
}

void bregman_checks(const ExperimentConfig& c, const PerturbationSampler* sampler,
                    std::vector<CheckResult>& out) {
  if (!sampler) return;
  const ActionSet set = c.action_set();
  const std::size_t n = std::min<std::size_t>(c.horizon, 500);
  AdversarySpec adv = c.adversary;
  const auto losses = generate(adv, set, n);
  const double eta = c.learning_rate ? *c.learning_rate
                                     : AlgorithmSpec::auto_learning_rate(Variant::SCFTPL, set,
                                                                         std::max<std::size_t>(n, 2));
  const AlgorithmSpec spec{Variant::SCFTPL, set, eta};
  const auto shared = std::make_shared<const PerturbationSampler>(*sampler);
  const auto records = run_scftpl(spec, losses, CounterRng(c.seeds.front()), shared);
  const auto b = bregman_diagnostic(set, eta, records);
  double min_b = 0.0, excess = -std::numeric_limits<double>::infinity();
  std::size_t counted = 0;
  for (std::size_t t = 0; t < b.size(); ++t) {
    min_b = std::min(min_b, b[t]);
    const double local = eta * eta * records[t].local_norm_sq;
    if (local <= 0.25) {
      excess = std::max(excess, b[t] - local);
      ++counted;
    }
  }
  out.push_back(at_least("bregman.nonnegative", min_b, -1e-12,
                         fmt::format("min divergence over {} rounds", b.size())));
  if (counted)
    out.push_back(at_most("bregman.local_norm_bound", excess, 1e-12,
                          fmt::format("max of B - |eta y_hat|_t^2 over {} rounds with "
                                      "|eta y_hat|_t <= 1/2",
                                      counted)));
}

}  // namespace

VerifyReport run_verification(const ExperimentConfig& c) {
  ExperimentConfig scftpl = c;
  scftpl.algorithm = Variant::SCFTPL;
  const auto sampler = make_sampler(scftpl);
  const CounterRng base(c.seeds.front(), kCheckStream);

  VerifyReport r;
  if (c.verify.densities) density_checks(c, sampler.get(), r.checks, base.split(kCheckStream + 1));
  if (c.verify.replication) replication_checks(c, *sampler, r.checks, base.split(kCheckStream + 2));
  if (c.verify.covariance) covariance_checks(c, sampler.get(), r.checks, base.split(kCheckStream + 3));
  if (c.verify.estimators) estimator_checks(c, sampler.get(), r.checks, base.split(kCheckStream + 4));
  if (c.verify.bregman) bregman_checks(c, sampler.get(), r.checks);
  return r;
}

}  // namespace scftpl
