#pragma once

#include <string>
#include <vector>

#include "scftpl/config.hpp"

namespace scftpl {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // "<=" or ">="
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::string to_json() const;
};

/// Runs the property suite enabled in config.verify for the configured body and
/// dimension. Deterministic given config.seeds.front().
VerifyReport run_verification(const ExperimentConfig& config);

/// Chi-square critical value with the given upper-tail probability.
double chi_square_critical(double dof, double tail);

/// P(|xi| <= s) for the ball perturbation through the incomplete beta function:
///   int_0^1 I_{s^2 u^2 / (1 + s^2 u^2)}(d/2, (d+1)/2) du.
double ball_radius_cdf_ibeta(double s, std::size_t d);

}  // namespace scftpl
