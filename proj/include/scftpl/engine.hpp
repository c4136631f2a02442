#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "scftpl/action_set.hpp"
#include "scftpl/errors.hpp"
#include "scftpl/estimation.hpp"
#include "scftpl/perturbation.hpp"
#include "scftpl/rng.hpp"

namespace scftpl {

enum class Variant { SCFTPL, SCRiBLe };

std::string_view to_string(Variant v);

struct AlgorithmSpec {
  Variant variant = Variant::SCFTPL;
  ActionSet set = ActionSet::hypercube(1);
  double learning_rate = 0.0;

  /// SC-FTPL: sqrt(2 ln n / n) on the hypercube, (1/d) sqrt(2 ln n / (3n)) on the ball.
  /// SCRiBLe: sqrt(theta ln n / (n d^2)) with theta the barrier parameter.
  static double auto_learning_rate(Variant variant, const ActionSet& set, std::size_t n);
  static AlgorithmSpec with_auto_rate(Variant variant, const ActionSet& set, std::size_t n);
};

struct RoundRecord {
  std::size_t t = 0;
  Vector y_hat_cum;  // cumulative estimate before this round
  Vector x;          // expected action
  Vector action;     // played action
  double scalar_loss = 0.0;
  Vector y_hat;
  double local_norm_sq = 0.0;  // |y_hat|^2 in the inverse Hessian norm at x
  bool step_violation = false;  // 2 eta |y_hat|_t > 1
};

/// Thrown when a run cannot continue; carries the rounds completed so far.
class AbortedRun : public NumericError {
 public:
  AbortedRun(const std::string& what, std::vector<RoundRecord> partial)
      : NumericError(what), partial_(std::move(partial)) {}
  const std::vector<RoundRecord>& partial_trace() const { return partial_; }

 private:
  std::vector<RoundRecord> partial_;
};

struct RoundOutcome {
  double scalar_loss = 0.0;
  double local_norm_sq = 0.0;
  bool step_violation = false;
};

/// One Bandits-GBPA learner. Holds the cumulative estimate; everything else per round
/// is recomputed from it in O(d).
class BanditLearner {
 public:
  /// For SC-FTPL on the ball the sampler and K function are built (or shared) on demand.
  explicit BanditLearner(AlgorithmSpec spec,
                         std::shared_ptr<const PerturbationSampler> sampler = nullptr,
                         std::shared_ptr<const KFunction> k_function = nullptr);

  const AlgorithmSpec& spec() const { return spec_; }
  const Vector& cumulative_estimate() const { return y_hat_cum_; }
  std::size_t rounds_played() const { return t_; }

  /// Plays one round against loss y using the round's RNG stream. Throws NumericError
  /// (state unchanged) when the expected action is too close to the boundary.
  RoundOutcome step(std::span<const double> y, CounterRng& rng, RoundRecord* record = nullptr);

 private:
  AlgorithmSpec spec_;
  std::shared_ptr<const PerturbationSampler> sampler_;
  std::shared_ptr<const KFunction> k_;
  Vector y_hat_cum_;
  Vector theta_, xi_, direction_;
  std::size_t t_ = 0;
};

/// RNG stream used for round t (1-based) of a run seeded with `seed`.
inline CounterRng round_stream(std::uint64_t seed, std::size_t t) {
  return CounterRng(seed, static_cast<std::uint64_t>(t));
}

std::vector<RoundRecord> run_scftpl(const AlgorithmSpec& spec, const std::vector<Vector>& losses,
                                    const CounterRng& rng,
                                    std::shared_ptr<const PerturbationSampler> sampler = nullptr);
std::vector<RoundRecord> run_scribble(const AlgorithmSpec& spec,
                                      const std::vector<Vector>& losses, const CounterRng& rng);

/// sum_t <y_t, A_t> - sum_t <y_t, u>.
double regret(const std::vector<RoundRecord>& records, const std::vector<Vector>& losses,
              std::span<const double> competitor);

/// Per-round B_{R*}(-eta Yhat_t, -eta Yhat_{t-1})
///   = R*(-eta Yhat_t) - R*(-eta Yhat_{t-1}) + eta <y_hat_t, grad R*(-eta Yhat_{t-1})>.
std::vector<double> bregman_diagnostic(const ActionSet& set, double eta,
                                       const std::vector<RoundRecord>& records);

}  // namespace scftpl
