#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace cfm {

// Deterministic generator used throughout the sampler and the simulators.
//
// The core is xoshiro256++, seeded through splitmix64 so that any 64-bit seed
// yields a well-mixed state. Substreams are derived by hashing
// (seed, iteration, block, unit): every sampler block draws each of its units
// from an independent stream, which makes single-threaded and multi-threaded
// sweeps produce bit-identical output.
//
// Distribution samplers are written out here rather than taken from
// <random> because the standard library leaves normal/gamma algorithms
// implementation-defined; results here are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  static Rng substream(uint64_t seed, uint64_t iteration, uint64_t block, uint64_t unit);

  uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Standard normal via the Marsaglia polar method.
  double normal();

  // Gamma(shape, scale = 1) via Marsaglia-Tsang squeeze; shape > 0.
  double gamma(double shape);

  // Inverse gamma with density ~ x^{-shape-1} exp(-rate/x).
  double inv_gamma(double shape, double rate);

  // Draw an index proportional to exp(logw[i] - max(logw)); safe for very
  // negative log weights.
  size_t categorical_from_log_weights(std::span<const double> logw);

 private:
  std::array<uint64_t, 4> s_{};
};

}  // namespace cfm
