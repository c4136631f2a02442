#pragma once

#include <array>
#include <cstdint>
#include <utility>

namespace scftpl {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based generator keyed by a 64-bit seed and a 64-bit stream id.
///
/// Output block i of stream s is philox(counter = {i_lo, i_hi, s_lo, s_hi}, key = seed),
/// so any (seed, stream, position) is addressable without replaying earlier draws.
/// The engine uses one stream per round, which makes runs reproducible from
/// (seed, round index) alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  /// Independent generator on another stream of the same seed.
  CounterRng split(std::uint64_t stream) const { return CounterRng(seed_, stream); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t n);

  /// Two independent standard normals via Box-Muller on two consecutive uniforms.
  std::pair<double, double> normal_pair();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 32-bit words left in buffer_
};

}  // namespace scftpl
