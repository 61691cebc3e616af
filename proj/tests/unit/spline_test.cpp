#include <cmath>

#include "doctest.h"

#include "core/grid.hpp"
#include "core/spline.hpp"
#include "support/testlib.hpp"

using namespace cfm;

TEST_CASE("equally spaced interior knots") {
  const SplineConfig cfg = make_spline_config(3, 6);
  CHECK(cfg.size() == 10);
  REQUIRE(cfg.knots.size() == 6);
  for (size_t k = 0; k < 6; ++k)
    CHECK(cfg.knots[k] == doctest::Approx(static_cast<double>(k + 1) / 7.0).epsilon(1e-15));

  CHECK(make_spline_config(3, 0).size() == 4);  // pure polynomial
  CHECK(make_spline_config(0, 1).size() == 2);

  const SplineConfig scaled = make_spline_config(1, 3, 2.0, 10.0);
  CHECK(scaled.knots[0] == doctest::Approx(4.0));
  CHECK(scaled.knots[1] == doctest::Approx(6.0));
  CHECK(scaled.knots[2] == doctest::Approx(8.0));
}

TEST_CASE("basis row values at pinned points") {
  SplineConfig linear;
  linear.degree = 1;
  linear.knots = {0.5};
  const auto r1 = evaluate_basis(linear, 0.75);
  REQUIRE(r1.size() == 3);
  CHECK(r1[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r1[1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(r1[2] == doctest::Approx(0.25).epsilon(1e-15));

  SplineConfig quad;
  quad.degree = 2;
  quad.knots = {0.3};
  const auto r2 = evaluate_basis(quad, 0.8);
  REQUIRE(r2.size() == 4);
  CHECK(r2[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r2[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r2[2] == doctest::Approx(0.64).epsilon(1e-15));
  CHECK(r2[3] == doctest::Approx(0.25).epsilon(1e-13));

  // below every knot the truncated entries vanish
  const SplineConfig cubic = make_spline_config(3, 4);
  const auto r3 = evaluate_basis(cubic, 0.1);
  for (size_t l = 4; l < r3.size(); ++l) CHECK(r3[l] == 0.0);
}

TEST_CASE("degree zero truncated terms are right-continuous steps") {
  SplineConfig cfg;
  cfg.degree = 0;
  cfg.knots = {0.5};
  CHECK(evaluate_basis(cfg, 0.49)[1] == 0.0);
  CHECK(evaluate_basis(cfg, 0.5)[1] == 1.0);  // switches on at the knot
  CHECK(evaluate_basis(cfg, 0.6)[1] == 1.0);
  CHECK(evaluate_basis(cfg, 0.49)[0] == 1.0);
}

TEST_CASE("continuity at the knots for positive degree") {
  for (int degree : {1, 2, 3}) {
    const SplineConfig cfg = make_spline_config(degree, 3);
    for (double knot : cfg.knots) {
      const auto lo = evaluate_basis(cfg, knot - 1e-13);
      const auto hi = evaluate_basis(cfg, knot + 1e-13);
      for (size_t l = 0; l < lo.size(); ++l) CHECK(std::abs(hi[l] - lo[l]) <= 1e-12);
    }
  }
}

TEST_CASE("grid evaluation: layouts and the all-ones first row") {
  const SplineConfig cfg = make_spline_config(3, 6);
  const TimeGrid grid = TimeGrid::uniform01(25);
  const BasisMatrix bm = evaluate_basis_grid(cfg, grid);
  CHECK(bm.size() == 10);
  CHECK(bm.times() == 25);
  CHECK(bm.by_function.rows == 10);
  CHECK(bm.by_function.cols == 25);
  CHECK(bm.by_time.rows == 25);
  CHECK(bm.by_time.cols == 10);

  for (size_t j = 0; j < 25; ++j) {
    CHECK(bm.by_function.at(0, j) == 1.0);
    for (size_t l = 0; l < 10; ++l) {
      CHECK(bm.by_function.at(l, j) == bm.by_time.at(j, l));
      CHECK(std::isfinite(bm.by_function.at(l, j)));
    }
    const auto row = evaluate_basis(cfg, grid.points[j]);
    for (size_t l = 0; l < 10; ++l) CHECK(bm.by_time.at(j, l) == row[l]);
  }
}

TEST_CASE("domain handling") {
  SplineConfig cfg = make_spline_config(2, 2);
  CHECK(testlib::error_kind([&] { evaluate_basis(cfg, 1.5); }) == ErrorKind::InvalidArgument);
  CHECK(testlib::error_kind([&] { evaluate_basis(cfg, -0.1); }) == ErrorKind::InvalidArgument);

  cfg.clamp = true;
  const auto clamped = evaluate_basis(cfg, 1.5);
  const auto edge = evaluate_basis(cfg, 1.0);
  for (size_t l = 0; l < edge.size(); ++l) CHECK(clamped[l] == edge[l]);
}

TEST_CASE("configuration validation") {
  CHECK(testlib::error_kind([] { make_spline_config(-1, 3); }) == ErrorKind::InvalidArgument);
  CHECK(testlib::error_kind([] { make_spline_config(3, 27); }) ==
        ErrorKind::InvalidArgument);  // 31 > 30 cap
  CHECK(make_spline_config(3, 26).size() == 30);  // at the cap is fine

  SplineConfig bad;
  bad.degree = 1;
  bad.knots = {0.5, 0.5};
  CHECK(testlib::error_kind([&] { check_spline_config(bad); }) == ErrorKind::InvalidArgument);

  bad.knots = {0.0};  // on the boundary, not strictly inside
  CHECK(testlib::error_kind([&] { check_spline_config(bad); }) == ErrorKind::InvalidArgument);

  bad.knots = {0.4};
  bad.domain_lo = 1.0;
  bad.domain_hi = 0.0;
  CHECK(testlib::error_kind([&] { check_spline_config(bad); }) == ErrorKind::InvalidArgument);
}
