#include "scftpl/engine.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace scftpl {

std::string_view to_string(Variant v) { return v == Variant::SCFTPL ? "scftpl" : "scribble"; }

double AlgorithmSpec::auto_learning_rate(Variant variant, const ActionSet& set, std::size_t n) {
  if (n < 2) throw std::invalid_argument("auto learning rate needs a horizon n >= 2");
  const double nn = static_cast<double>(n);
  const double d = static_cast<double>(set.dimension());
  const double ln = std::log(nn);
  if (variant == Variant::SCRiBLe) return std::sqrt(set.barrier_parameter() * ln / (nn * d * d));
  if (set.kind() == SetKind::Hypercube) return std::sqrt(2.0 * ln / nn);
  return std::sqrt(2.0 * ln / (3.0 * nn)) / d;
}

AlgorithmSpec AlgorithmSpec::with_auto_rate(Variant variant, const ActionSet& set,
                                            std::size_t n) {
  return AlgorithmSpec{variant, set, auto_learning_rate(variant, set, n)};
}

BanditLearner::BanditLearner(AlgorithmSpec spec, std::shared_ptr<const PerturbationSampler> sampler,
                             std::shared_ptr<const KFunction> k_function)
    : spec_(std::move(spec)), sampler_(std::move(sampler)), k_(std::move(k_function)) {
  if (!(spec_.learning_rate > 0.0) || !std::isfinite(spec_.learning_rate))
    throw std::invalid_argument("BanditLearner: learning rate must be positive");
  const std::size_t d = spec_.set.dimension();
  if (spec_.variant == Variant::SCFTPL) {
    if (!sampler_) sampler_ = std::make_shared<const PerturbationSampler>(spec_.set);
    if (sampler_->set().kind() != spec_.set.kind() || sampler_->set().dimension() != d)
      throw std::invalid_argument("BanditLearner: sampler built for another action set");
    if (spec_.set.kind() == SetKind::EuclideanBall && d >= 2 && !k_) k_ = KFunction::shared(d);
  }
  y_hat_cum_.assign(d, 0.0);
  theta_.resize(d);
  xi_.resize(d);
  direction_.resize(d);
}

namespace {

LocalNormContext hessian_at(const ActionSet& set, std::span<const double> x) {
  try {
    return set.barrier_hessian(x);
  } catch (const std::domain_error& e) {
    throw NumericError(std::string("expected action left the interior: ") + e.what());
  }
}

}  // namespace

RoundOutcome BanditLearner::step(std::span<const double> y, CounterRng& rng,
                                 RoundRecord* record) {
  const ActionSet& set = spec_.set;
  const std::size_t d = set.dimension();
  if (y.size() != d) throw std::invalid_argument("BanditLearner::step: loss dimension mismatch");
  const double eta = spec_.learning_rate;

  for (std::size_t i = 0; i < d; ++i) theta_[i] = -eta * y_hat_cum_[i];
  Vector x = set.conjugate_gradient(theta_);

  Vector action, y_hat;
  double loss = 0.0;
  if (spec_.variant == Variant::SCFTPL) {
    CovarianceModel model;
    if (set.kind() == SetKind::Hypercube) {
      try {
        model = covariance_hypercube(x);
      } catch (const std::domain_error& e) {
        throw NumericError(std::string("near-singular covariance: ") + e.what());
      }
    } else {
      model = d >= 2 ? covariance_ball(theta_, *k_) : covariance_ball(theta_, 0.0);
    }
    sampler_->sample_into(rng, xi_);
    for (std::size_t i = 0; i < d; ++i) direction_[i] = -theta_[i] - xi_[i];
    action = set.linear_minimizer(direction_);
    loss = dot(y, action);
    if (!(std::abs(loss) <= 1.0 + 1e-9))
      throw std::invalid_argument("loss vector is not normalized: |<y, A>| = " +
                                  std::to_string(loss));
    y_hat = estimate_loss(model, action, loss);
  } else {
    if (set.kind() == SetKind::Hypercube) {
      for (double v : x)
        if (!((1.0 - v) * (1.0 + v) >= kCovarianceGapFloor))
          throw NumericError("expected action too close to the boundary");
    }
    const LocalNormContext H = hessian_at(set, x);
    const std::uint64_t pick = rng.below(2 * d);
    action = dikin_pole(H, static_cast<std::size_t>(pick / 2), pick % 2 ? -1 : 1);
    loss = dot(y, action);
    if (!(std::abs(loss) <= 1.0 + 1e-9))
      throw std::invalid_argument("loss vector is not normalized: |<y, A>| = " +
                                  std::to_string(loss));
    Vector diff(d);
    for (std::size_t i = 0; i < d; ++i) diff[i] = action[i] - x[i];
    y_hat = H.apply(diff);
    const double f = static_cast<double>(d) * loss;
    for (auto& v : y_hat) v *= f;
  }

  const LocalNormContext H = hessian_at(set, x);
  RoundOutcome out;
  out.scalar_loss = loss;
  out.local_norm_sq = H.norm_sq(y_hat, true);
  out.step_violation = 2.0 * eta * std::sqrt(out.local_norm_sq) > 1.0;

  ++t_;
  if (record) {
    record->t = t_;
    record->y_hat_cum = y_hat_cum_;
    record->x = std::move(x);
    record->action = std::move(action);
    record->scalar_loss = loss;
    record->local_norm_sq = out.local_norm_sq;
    record->step_violation = out.step_violation;
  }
  for (std::size_t i = 0; i < d; ++i) y_hat_cum_[i] += y_hat[i];
  if (record) record->y_hat = std::move(y_hat);
  return out;
}

namespace {

std::vector<RoundRecord> run_loop(BanditLearner& learner, const std::vector<Vector>& losses,
                                  const CounterRng& rng) {
  std::vector<RoundRecord> records;
  records.reserve(losses.size());
  for (std::size_t t = 1; t <= losses.size(); ++t) {
    CounterRng round = round_stream(rng.seed(), t);
    RoundRecord rec;
    try {
      learner.step(losses[t - 1], round, &rec);
    } catch (const NumericError& e) {
      throw AbortedRun("run aborted at round " + std::to_string(t) + ": " + e.what(),
                       std::move(records));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<RoundRecord> run_scftpl(const AlgorithmSpec& spec, const std::vector<Vector>& losses,
                                    const CounterRng& rng,
                                    std::shared_ptr<const PerturbationSampler> sampler) {
  if (spec.variant != Variant::SCFTPL) throw std::invalid_argument("run_scftpl: wrong variant");
  BanditLearner learner(spec, std::move(sampler));
  return run_loop(learner, losses, rng);
}

std::vector<RoundRecord> run_scribble(const AlgorithmSpec& spec,
                                      const std::vector<Vector>& losses, const CounterRng& rng) {
  if (spec.variant != Variant::SCRiBLe) throw std::invalid_argument("run_scribble: wrong variant");
  BanditLearner learner(spec);
  return run_loop(learner, losses, rng);
}

double regret(const std::vector<RoundRecord>& records, const std::vector<Vector>& losses,
              std::span<const double> competitor) {
  if (records.size() != losses.size()) throw std::invalid_argument("regret: length mismatch");
  double r = 0.0;
  for (std::size_t t = 0; t < records.size(); ++t)
    r += records[t].scalar_loss - dot(losses[t], competitor);
  return r;
}

namespace {

// One-dimensional conjugate r*(u) = u^2/(1+s) + ln(2/(1+s)), s = sqrt(1+u^2), shared by
// each hypercube coordinate and by the ball as a function of |theta|.
long double conj1(long double u) {
  const long double s = std::sqrt(1.0L + u * u);
  return u * u / (1.0L + s) + std::log(2.0L / (1.0L + s));
}

}  // namespace

std::vector<double> bregman_diagnostic(const ActionSet& set, double eta,
                                       const std::vector<RoundRecord>& records) {
  std::vector<double> out;
  out.reserve(records.size());
  const std::size_t d = set.dimension();
  const long double e = eta;
  for (const auto& r : records) {
    long double b = 0.0L;
    if (set.kind() == SetKind::Hypercube) {
      for (std::size_t i = 0; i < d; ++i) {
        const long double th = -e * r.y_hat_cum[i];
        const long double nx = th - e * r.y_hat[i];
        const long double x = th / (1.0L + std::sqrt(1.0L + th * th));
        b += conj1(nx) - conj1(th) + e * r.y_hat[i] * x;
      }
    } else {
      long double th2 = 0.0L, nx2 = 0.0L, lin = 0.0L;
      for (std::size_t i = 0; i < d; ++i) {
        const long double th = -e * r.y_hat_cum[i];
        const long double nx = th - e * r.y_hat[i];
        th2 += th * th;
        nx2 += nx * nx;
        lin += r.y_hat[i] * th;
      }
      const long double scale = 1.0L / (1.0L + std::sqrt(1.0L + th2));
      b = conj1(std::sqrt(nx2)) - conj1(std::sqrt(th2)) + e * lin * scale;
    }
    out.push_back(static_cast<double>(b));
  }
  return out;
}

}  // namespace scftpl
