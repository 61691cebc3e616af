#include "core/spline.hpp"

#include <cstdio>
#include <string>

namespace cfm {

SplineConfig make_spline_config(int degree, size_t n_knots, double lo, double hi) {
  SplineConfig cfg;
  cfg.degree = degree;
  cfg.domain_lo = lo;
  cfg.domain_hi = hi;
  cfg.knots.resize(n_knots);
  const double span = hi - lo;
  for (size_t k = 0; k < n_knots; ++k)
    cfg.knots[k] = lo + span * static_cast<double>(k + 1) / static_cast<double>(n_knots + 1);
  check_spline_config(cfg);
  return cfg;
}

void check_spline_config(const SplineConfig& cfg) {
  if (cfg.degree < 0) fail(ErrorKind::InvalidArgument, "spline degree must be non-negative");
  if (!(cfg.domain_lo < cfg.domain_hi))
    fail(ErrorKind::InvalidArgument, "spline domain must have positive width");
  for (size_t k = 0; k < cfg.knots.size(); ++k) {
    const double kn = cfg.knots[k];
    if (!(kn > cfg.domain_lo) || !(kn < cfg.domain_hi))
      fail(ErrorKind::InvalidArgument, "spline knots must lie strictly inside the domain");
    if (k > 0 && !(kn > cfg.knots[k - 1]))
      fail(ErrorKind::InvalidArgument, "spline knots must be strictly increasing");
  }
  if (cfg.size() > kMaxBasisSize)
    fail(ErrorKind::InvalidArgument,
         "basis size " + std::to_string(cfg.size()) + " exceeds the cap of " +
             std::to_string(kMaxBasisSize));
  if (cfg.size() > kWideBasisSize)
    std::fprintf(stderr, "warning: basis size %zu is large; fits will be slow\n", cfg.size());
}

std::vector<double> evaluate_basis(const SplineConfig& cfg, double t) {
  if (t < cfg.domain_lo || t > cfg.domain_hi) {
    if (!cfg.clamp)
      fail(ErrorKind::InvalidArgument,
           "basis evaluation point " + std::to_string(t) + " is outside the domain");
    t = t < cfg.domain_lo ? cfg.domain_lo : cfg.domain_hi;
  }

  const int q = cfg.degree;
  std::vector<double> row(cfg.size());
  double power = 1.0;
  for (int l = 0; l <= q; ++l) {
    row[static_cast<size_t>(l)] = power;  // t^0 = 1 even at t = 0
    power *= t;
  }
  for (size_t k = 0; k < cfg.knots.size(); ++k) {
    const double d = t - cfg.knots[k];
    double val = 0.0;
    if (d >= 0.0) {
      val = 1.0;  // (0)_+^0 = 1: step switches on at the knot
      for (int e = 0; e < q; ++e) val *= d;
    }
    row[static_cast<size_t>(q) + 1 + k] = val;
  }
  return row;
}

BasisMatrix evaluate_basis_grid(const SplineConfig& cfg, const TimeGrid& grid) {
  check_spline_config(cfg);
  if (!grid.strictly_increasing() || grid.count() < 2)
    fail(ErrorKind::Validation, "time grid must be strictly increasing with at least two points");

  BasisMatrix bm;
  bm.config = cfg;
  bm.grid = grid;
  const size_t big = cfg.size();
  const size_t t = grid.count();
  bm.by_function = Mat(big, t);
  bm.by_time = Mat(t, big);
  for (size_t j = 0; j < t; ++j) {
    const auto row = evaluate_basis(cfg, grid.points[j]);
    for (size_t l = 0; l < big; ++l) {
      bm.by_function.at(l, j) = row[l];
      bm.by_time.at(j, l) = row[l];
    }
  }
  return bm;
}

}  // namespace cfm
