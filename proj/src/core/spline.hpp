#pragma once

#include <cstddef>
#include <vector>

#include "core/grid.hpp"
#include "core/linalg.hpp"

namespace cfm {

// Truncated power spline basis of degree q with K interior knots:
//
//   B_1(t), ..., B_{q+1}(t)  =  1, t, ..., t^q
//   B_{q+1+k}(t)             =  (t - knot_k)_+^q        k = 1..K
//
// giving q + K + 1 columns in total. 0^0 is taken as 1, so for q = 0 the
// truncated terms are right-continuous step functions switching on at their
// knot. Knots must be strictly increasing and strictly inside the domain.
struct SplineConfig {
  int degree = 3;
  std::vector<double> knots;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
  bool clamp = false;  // clamp out-of-domain t instead of throwing

  size_t size() const { return static_cast<size_t>(degree) + knots.size() + 1; }

  bool operator==(const SplineConfig&) const = default;
};

inline constexpr size_t kMaxBasisSize = 30;
inline constexpr size_t kWideBasisSize = 20;  // warn above this

// Equally spaced interior knots: knot_k = lo + k * (hi - lo) / (n_knots + 1).
// Throws when the resulting basis exceeds kMaxBasisSize.
SplineConfig make_spline_config(int degree, size_t n_knots, double lo = 0.0, double hi = 1.0);

// Validate an externally supplied configuration (knot order, domain, cap).
void check_spline_config(const SplineConfig& cfg);

// One basis row: (B_1(t), ..., B_L(t)).
std::vector<double> evaluate_basis(const SplineConfig& cfg, double t);

// Basis evaluated over a grid, kept in both layouts because the sampler
// streams it both by basis function and by time point.
struct BasisMatrix {
  SplineConfig config;
  TimeGrid grid;
  Mat by_function;  // L x T
  Mat by_time;      // T x L

  size_t size() const { return config.size(); }
  size_t times() const { return grid.count(); }
};

BasisMatrix evaluate_basis_grid(const SplineConfig& cfg, const TimeGrid& grid);

}  // namespace cfm
