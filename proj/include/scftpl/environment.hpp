#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "scftpl/action_set.hpp"

namespace scftpl {

enum class AdversaryKind { FixedVector, PiecewiseSwitching, RotatingDirection, SeededRandom };

std::string_view to_string(AdversaryKind kind);
AdversaryKind adversary_from_string(std::string_view name);

/// Oblivious loss generator. Every emitted y is rescaled so that sup over K of
/// |<y, a>| equals `scale` (|y|_1 on the hypercube, |y|_2 on the ball).
struct AdversarySpec {
  AdversaryKind kind = AdversaryKind::FixedVector;
  Vector base;               // empty means e_1
  std::size_t period = 0;    // PiecewiseSwitching: sign flips every `period` rounds; 0 means n/2
  double angle = 0.01;       // RotatingDirection: radians per round in the (e_1, e_2) plane
  double noise = 1.0;        // SeededRandom: y = base + noise * N(0, I)
  std::uint64_t seed = 0;    // SeededRandom
  double scale = 1.0;        // in (0, 1]
};

std::vector<Vector> generate(const AdversarySpec& spec, const ActionSet& set, std::size_t n);

/// argmin over K of <sum_t y_t, u>.
Vector best_in_hindsight(const ActionSet& set, const std::vector<Vector>& losses);

}  // namespace scftpl
