#pragma once

#include <cstdint>

namespace lgscan {

// Deterministic counter-style generator: every (seed, stream) pair yields
// an independent sequence, so scan points can be evaluated in any order or
// from any thread without changing the drawn values.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double next_double();

 private:
  std::uint64_t state_;
};

// Exact Poisson draw with the given mean, consuming uniforms from `rng`.
// Sequential inversion below mean 30, transformed rejection above.
std::int64_t poisson_sample(CounterRng& rng, double mean);

}  // namespace lgscan
