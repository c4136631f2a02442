#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scftpl/action_set.hpp"
#include "scftpl/engine.hpp"
#include "scftpl/environment.hpp"
#include "scftpl/perturbation.hpp"

namespace scftpl {

struct VerifyOptions {
  bool replication = true;
  bool densities = true;
  bool covariance = true;
  bool estimators = true;
  bool bregman = true;
  std::size_t samples = 200000;  // Monte-Carlo draws per check
  std::size_t thetas = 20;       // random states for the replication check
};

struct BenchOptions {
  std::vector<std::size_t> dimensions{16, 64, 256, 1024, 4096};
  std::size_t rounds = 400;
  double max_ratio = 6.0;
};

/// One experiment, read from a JSON document. Every field has a default except the
/// seed list, which defaults to {1}.
struct ExperimentConfig {
  SetKind set = SetKind::Hypercube;
  std::size_t dimension = 2;
  std::size_t horizon = 1000;
  Variant algorithm = Variant::SCFTPL;
  std::optional<double> learning_rate;  // empty means "auto"
  AdversarySpec adversary;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "out";
  bool per_seed_files = false;
  VerifyOptions verify;
  BenchOptions bench;
  RadialTableSpec radial;
  std::optional<std::filesystem::path> radial_cache_dir;
  double density_scale = 1.0;  // fault injection: draws scale * xi
  unsigned threads = 0;        // 0 means hardware concurrency

  ActionSet action_set() const { return ActionSet(set, dimension); }
  /// Resolves "auto" for this configuration.
  double eta() const;
  /// Regret-bound preconditions that do not hold for this configuration (auto rate only).
  std::vector<std::string> warnings() const;
};

/// Parses and validates; throws ValidationError with "line N: ..." messages.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Parses "1,2,7-9" into a seed list.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

std::string to_json(const ExperimentConfig& config);

}  // namespace scftpl
