#pragma once

// Deterministic helpers shared by the test binaries.  The generator is a
// splitmix64 so frozen regression values do not depend on the standard
// library's distribution implementations.

#include <cstdint>
#include <vector>

#include "fracsparse/dyadic.hpp"
#include "fracsparse/gridfn.hpp"

namespace testsup {

struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  long long below(long long n) { return static_cast<long long>(next() % static_cast<std::uint64_t>(n)); }
};

/// Random step function: piecewise constant on dyadic blocks of the frame.
inline fracsparse::GridFunction random_step(const fracsparse::DyadicFrame& frame, Rng& rng,
                                            int block_level, bool nonneg) {
  const long long cells = frame.cell_count();
  const long long block = 1LL << (frame.depth() - block_level);
  std::vector<double> v(static_cast<size_t>(cells));
  double cur = 0.0;
  for (long long i = 0; i < cells; ++i) {
    if (i % block == 0) {
      cur = rng.uniform(nonneg ? 0.0 : -2.0, 2.0);
      if (rng.uniform() < 0.25) cur = 0.0;  // leave some flat gaps
    }
    v[static_cast<size_t>(i)] = cur;
  }
  return fracsparse::GridFunction::from_values(frame, v);
}

}  // namespace testsup
