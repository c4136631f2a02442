#include "scftpl/environment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "scftpl/rng.hpp"

namespace scftpl {

std::string_view to_string(AdversaryKind kind) {
  switch (kind) {
    case AdversaryKind::FixedVector: return "fixed";
    case AdversaryKind::PiecewiseSwitching: return "switching";
    case AdversaryKind::RotatingDirection: return "rotating";
    case AdversaryKind::SeededRandom: return "random";
  }
  return "?";
}

AdversaryKind adversary_from_string(std::string_view name) {
  for (auto k : {AdversaryKind::FixedVector, AdversaryKind::PiecewiseSwitching,
                 AdversaryKind::RotatingDirection, AdversaryKind::SeededRandom})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown adversary kind '" + std::string(name) +
                              "' (expected fixed, switching, rotating or random)");
}

namespace {

// Rescales y in place so that sup_K |<y, a>| = scale; zero stays zero.
void normalize(const ActionSet& set, Vector& y, double scale) {
  const double s = set.support(y);
  if (s == 0.0) return;
  for (auto& v : y) v *= scale / s;
}

}  // namespace

std::vector<Vector> generate(const AdversarySpec& spec, const ActionSet& set, std::size_t n) {
  const std::size_t d = set.dimension();
  if (n == 0) throw std::invalid_argument("generate: horizon must be positive");
  if (!(spec.scale > 0.0 && spec.scale <= 1.0))
    throw std::invalid_argument("generate: scale must lie in (0, 1]");
  Vector base = spec.base;
  if (base.empty()) {
    base.assign(d, 0.0);
    base[0] = 1.0;
  }
  if (base.size() != d) throw std::invalid_argument("generate: base has the wrong dimension");
  for (double v : base)
    if (!std::isfinite(v)) throw std::invalid_argument("generate: base must be finite");
  const bool zero_base = set.support(base) == 0.0;
  if (zero_base && spec.kind != AdversaryKind::SeededRandom)
    throw std::invalid_argument("generate: zero base vector cannot be normalized");

  std::vector<Vector> out(n);
  switch (spec.kind) {
    case AdversaryKind::FixedVector: {
      normalize(set, base, spec.scale);
      for (auto& y : out) y = base;
      break;
    }
    case AdversaryKind::PiecewiseSwitching: {
      const std::size_t period = spec.period ? spec.period : std::max<std::size_t>(n / 2, 1);
      normalize(set, base, spec.scale);
      Vector flipped = base;
      for (auto& v : flipped) v = -v;
      for (std::size_t i = 0; i < n; ++i) out[i] = (i / period) % 2 ? flipped : base;
      break;
    }
    case AdversaryKind::RotatingDirection: {
      for (std::size_t i = 0; i < n; ++i) {
        Vector y = base;
        if (d >= 2) {
          const double c = std::cos(spec.angle * static_cast<double>(i));
          const double s = std::sin(spec.angle * static_cast<double>(i));
          y[0] = c * base[0] - s * base[1];
          y[1] = s * base[0] + c * base[1];
        }
        normalize(set, y, spec.scale);
        out[i] = std::move(y);
      }
      break;
    }
    case AdversaryKind::SeededRandom: {
      if (!(spec.noise >= 0.0)) throw std::invalid_argument("generate: noise must be >= 0");
      for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(spec.seed, i);
        Vector y = base;
        for (std::size_t j = 0; j < d; j += 2) {
          auto [a, b] = rng.normal_pair();
          y[j] += spec.noise * a;
          if (j + 1 < d) y[j + 1] += spec.noise * b;
        }
        normalize(set, y, spec.scale);
        out[i] = std::move(y);
      }
      break;
    }
  }
  return out;
}

Vector best_in_hindsight(const ActionSet& set, const std::vector<Vector>& losses) {
  if (losses.empty()) throw std::invalid_argument("best_in_hindsight: empty loss sequence");
  Vector sum(set.dimension(), 0.0);
  for (const auto& y : losses) {
    if (y.size() != sum.size()) throw std::invalid_argument("best_in_hindsight: size mismatch");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += y[i];
  }
  return set.linear_minimizer(sum);
}

}  // namespace scftpl
