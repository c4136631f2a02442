#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "scftpl/config.hpp"

namespace scftpl {

struct BenchRow {
  std::size_t dimension = 0;
  double median_ns = 0.0;  // per round
  double rounds_per_second = 0.0;
  double ratio = 0.0;      // median_ns / previous row's median_ns (0 for the first row)
};

struct BenchReport {
  SetKind set = SetKind::Hypercube;
  Variant variant = Variant::SCFTPL;
  std::vector<BenchRow> rows;
  double max_ratio_allowed = 6.0;
  /// Every ratio between consecutive rows whose dimensions differ by 4x is within bounds.
  bool passed() const;
  std::string to_table() const;
  std::string to_json() const;
};

/// Median per-round wall time of the configured algorithm and body over
/// config.bench.dimensions, each measured on config.bench.rounds rounds after a warm-up.
BenchReport run_bench(const ExperimentConfig& config);

}  // namespace scftpl
