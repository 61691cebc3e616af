#include "core/rng.hpp"

#include <cmath>
#include <limits>

#include "core/common.hpp"

namespace cfm {
namespace {

inline uint64_t splitmix_next(uint64_t& x) {
  uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline uint64_t mix_in(uint64_t h, uint64_t v) {
  // boost-style combine followed by a splitmix finalizer round
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
  uint64_t x = h;
  return splitmix_next(x);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t x = seed;
  for (auto& w : s_) w = splitmix_next(x);
}

Rng Rng::substream(uint64_t seed, uint64_t iteration, uint64_t block, uint64_t unit) {
  uint64_t h = seed;
  h = mix_in(h, iteration + 1);
  h = mix_in(h, block + 1);
  h = mix_in(h, unit + 1);
  return Rng(h);
}

uint64_t Rng::next_u64() {
  // xoshiro256++
  const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) fail(ErrorKind::InvalidArgument, "gamma shape must be positive");
  if (shape < 1.0) {
    // boost with shape+1, then scale back down
    const double g = gamma(shape + 1.0);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::inv_gamma(double shape, double rate) {
  if (!(rate > 0.0)) fail(ErrorKind::InvalidArgument, "inverse-gamma rate must be positive");
  const double g = gamma(shape);
  const double out = rate / g;
  if (!std::isfinite(out) || !(out > 0.0))
    fail(ErrorKind::Numeric, "inverse-gamma draw is not finite and positive");
  return out;
}

size_t Rng::categorical_from_log_weights(std::span<const double> logw) {
  if (logw.empty()) fail(ErrorKind::InvalidArgument, "categorical draw needs at least one weight");
  double top = -std::numeric_limits<double>::infinity();
  for (double w : logw)
    if (w > top) top = w;
  double total = 0.0;
  for (double w : logw) total += std::exp(w - top);
  const double r = uniform() * total;
  double acc = 0.0;
  for (size_t i = 0; i + 1 < logw.size(); ++i) {
    acc += std::exp(logw[i] - top);
    if (r < acc) return i;
  }
  return logw.size() - 1;
}

}  // namespace cfm
