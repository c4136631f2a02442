#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "scftpl/config.hpp"
#include "scftpl/perturbation.hpp"

namespace scftpl {

/// Regret bound drawn next to the empirical curve, evaluated at round t of horizon n:
///   SC-FTPL hypercube  d sqrt(2 t ln n) + 2
///   SC-FTPL ball       d sqrt(6 t ln n) + 2 + (64 e / d^2) ln^3 n
///   SCRiBLe            2 d sqrt(theta t ln n) + 2
double regret_bound(SetKind set, Variant variant, std::size_t d, std::size_t t, std::size_t n);

/// Frequency bound (32 e / d^2) ln^3 n / n on rounds with 2 eta |y_hat|_t > 1 (ball).
double violation_rate_bound(std::size_t d, std::size_t n);

struct SeedResult {
  std::uint64_t seed = 0;
  Vector regret;                 // realized regret against the best action of each prefix
  std::vector<double> losses;    // <y_t, A_t>
  std::size_t violations = 0;
  double wall_seconds = 0.0;
};

struct RegretTrace {
  double eta = 0.0;
  Vector mean_regret, se, bound;
  std::vector<SeedResult> per_seed;  // ordered like config.seeds
  std::size_t total_violations = 0;
  double wall_seconds = 0.0;
  double ns_per_round = 0.0;
  std::vector<std::string> warnings;

  double final_mean() const { return mean_regret.empty() ? 0.0 : mean_regret.back(); }
  double final_se() const { return se.empty() ? 0.0 : se.back(); }
  double final_bound() const { return bound.empty() ? 0.0 : bound.back(); }
};

/// Perturbation sampler for the config: radial table (cached when a cache dir is set)
/// and the fault-injection scale. Null for SCRiBLe.
std::shared_ptr<const PerturbationSampler> make_sampler(const ExperimentConfig& config);

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed,
                    const std::vector<Vector>& losses,
                    std::shared_ptr<const PerturbationSampler> sampler);

/// Runs every seed (fanned out over worker threads) and aggregates in seed order,
/// so the result does not depend on scheduling.
RegretTrace run_experiment(const ExperimentConfig& config);

/// CSV with header "t,mean_regret,se,bound"; '.' decimals, LF line endings.
std::string format_regret_csv(const RegretTrace& trace);
std::string format_seed_csv(const SeedResult& result);
std::string format_summary_json(const ExperimentConfig& config, const RegretTrace& trace);

/// Writes regret.csv, summary.json and (optionally) seed_<s>.csv into dir.
void write_run_outputs(const ExperimentConfig& config, const RegretTrace& trace,
                       const std::filesystem::path& dir);

}  // namespace scftpl
