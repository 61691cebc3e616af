#pragma once

#include <cstdint>

#include "core/rng.hpp"

namespace cfm {

// Wrapped normal density and the integer wrap-count augmentation.
//
// A real-valued level x with Gaussian noise observed modulo 2*pi has density
//
//   f(y) = sum_m phi(y - mean + 2*pi*m; 0, sigma2),   y in [0, 2*pi)
//
// the sum running over all integers m. Pairing y with the latent wrap count
// z gives the joint term phi(y - mean + 2*pi*z; 0, sigma2); summing the
// joint over z recovers f exactly, which is what makes the Gibbs treatment
// of the modulus tractable.
//
// Truncation: sums and the wrap-count sampler keep 2*half_width + 1 terms
// centered on the integer nearest to (mean - y) / (2*pi), i.e. on the wrap
// index carrying the dominant mass. Centering matters: residuals can sit
// many wraps away from zero when the latent curves drift over several
// cycles, and a window anchored at zero would silently clip them.

// Smallest safe half-width for the truncated sum at a given noise level:
// max(1, ceil((6*sqrt(sigma2) + 2*pi) / (2*pi))). Terms outside that window
// are at least e^{-18} smaller than the dominant one whenever the window is
// centered as above.
int choose_truncation(double sigma2);

// Truncated wrapped normal density at y (log-sum-exp inside).
double wrapped_density(double y, double mean, double sigma2, int half_width);

// One joint term phi(y - mean + 2*pi*wrap; 0, sigma2).
double wrapped_joint_term(double y, double mean, double sigma2, int64_t wrap);

// Center of the truncation window: integer nearest to (mean - y) / (2*pi).
int64_t dominant_wrap_index(double y, double mean);

// Draw a wrap count from its discrete conditional given residual = y - mean.
// Support is the centered window of width 2*half_width + 1; weights are the
// joint terms above, normalized in log space.
int64_t sample_wrap_count(double residual, double sigma2, int half_width, Rng& rng);

}  // namespace cfm
