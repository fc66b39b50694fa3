#pragma once

#include <cstdint>
#include <random>

#include "adsim/core/hash.hpp"
#include "adsim/core/ids.hpp"

namespace adsim::sim {

/// Purposes that get their own substream per node.
enum class Stream : std::uint64_t { Radio = 1, Mobility = 2, Workload = 3 };

/// 64-bit Mersenne twister with portable real/int conversions (the std
/// distributions are implementation defined, the engine is not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t substream_seed(std::uint64_t scenario_seed, NodeId node, Stream purpose) {
  return hash_combine(hash_combine(scenario_seed, node.value + 1ULL), static_cast<std::uint64_t>(purpose));
}

}  // namespace adsim::sim
