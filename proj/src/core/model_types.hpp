#pragma once

#include <cstdint>

namespace cfm {

// Hyperparameters of the hierarchical circular functional model.
//
// Per basis coefficient l the hierarchy is
//   subject coefficient ~ N(channel mean, tau2_l)
//   channel mean        ~ N(population level beta_l, gamma2_l)
//   beta_l              ~ N(a0, b0)
// with inverse-gamma priors on each variance component and on the wrapped
// observation noise sigma2.
struct Hyperparams {
  double a0 = 0.0;
  double b0 = 100.0;
  double nu_tau = 2.0, eta_tau = 2.0;
  double nu_gamma = 2.0, eta_gamma = 2.0;
  double nu_sigma = 2.0, eta_sigma = 2.0;

  bool valid() const {
    return b0 > 0.0 && nu_tau > 0.0 && eta_tau > 0.0 && nu_gamma > 0.0 && eta_gamma > 0.0 &&
           nu_sigma > 0.0 && eta_sigma > 0.0;
  }

  bool operator==(const Hyperparams&) const = default;
};

struct ChainConfig {
  int64_t burnin = 1000;
  int64_t samples = 1000;
  int64_t thin = 1;
  uint64_t seed = 0;
  int threads = 1;

  bool operator==(const ChainConfig&) const = default;
};

}  // namespace cfm
