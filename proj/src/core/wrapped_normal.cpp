#include "core/wrapped_normal.hpp"

#include <cmath>
#include <vector>

#include "core/common.hpp"

namespace cfm {

int choose_truncation(double sigma2) {
  if (!(sigma2 > 0.0)) fail(ErrorKind::InvalidArgument, "sigma2 must be positive");
  const double w = std::ceil((6.0 * std::sqrt(sigma2) + kTwoPi) / kTwoPi);
  return w < 1.0 ? 1 : static_cast<int>(w);
}

int64_t dominant_wrap_index(double y, double mean) {
  return std::llround((mean - y) / kTwoPi);
}

double wrapped_joint_term(double y, double mean, double sigma2, int64_t wrap) {
  const double d = y - mean + kTwoPi * static_cast<double>(wrap);
  return std::exp(-0.5 * d * d / sigma2) / std::sqrt(kTwoPi * sigma2);
}

double wrapped_density(double y, double mean, double sigma2, int half_width) {
  if (!(sigma2 > 0.0)) fail(ErrorKind::InvalidArgument, "sigma2 must be positive");
  if (half_width < 1) fail(ErrorKind::InvalidArgument, "truncation half-width must be >= 1");

  const int64_t center = dominant_wrap_index(y, mean);
  const double inv2s = 0.5 / sigma2;

  // log-sum-exp over the window, anchored at the dominant term
  double top = -1.0 / 0.0;
  std::vector<double> expo(2 * static_cast<size_t>(half_width) + 1);
  for (int m = -half_width; m <= half_width; ++m) {
    const double d = y - mean + kTwoPi * static_cast<double>(center + m);
    const double e = -d * d * inv2s;
    expo[static_cast<size_t>(m + half_width)] = e;
    if (e > top) top = e;
  }
  double acc = 0.0;
  for (double e : expo) acc += std::exp(e - top);
  return std::exp(top + std::log(acc)) / std::sqrt(kTwoPi * sigma2);
}

int64_t sample_wrap_count(double residual, double sigma2, int half_width, Rng& rng) {
  if (!(sigma2 > 0.0)) fail(ErrorKind::InvalidArgument, "sigma2 must be positive");
  if (half_width < 1) fail(ErrorKind::InvalidArgument, "truncation half-width must be >= 1");

  const int64_t center = std::llround(-residual / kTwoPi);  // mean - y = -residual
  const double inv2s = 0.5 / sigma2;
  std::vector<double> logw(2 * static_cast<size_t>(half_width) + 1);
  for (int m = -half_width; m <= half_width; ++m) {
    const double d = residual + kTwoPi * static_cast<double>(center + m);
    logw[static_cast<size_t>(m + half_width)] = -d * d * inv2s;
  }
  const size_t pick = rng.categorical_from_log_weights(logw);
  return center + static_cast<int64_t>(pick) - half_width;
}

}  // namespace cfm
