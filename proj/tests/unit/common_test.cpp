#include <cmath>

#include "doctest.h"

#include "core/common.hpp"

using namespace cfm;

TEST_CASE("wrap_angle reduces into [0, 2*pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(kTwoPi) == 0.0);
  CHECK(wrap_angle(-kTwoPi) == 0.0);
  CHECK(wrap_angle(3.0) == 3.0);

  CHECK(wrap_angle(6.4) == doctest::Approx(0.11681469282041412).epsilon(1e-12));
  CHECK(wrap_angle(-0.1) == doctest::Approx(kTwoPi - 0.1).epsilon(1e-14));
  CHECK(wrap_angle(3.0 - 3.5) == doctest::Approx(5.7831853).epsilon(1e-7));

  for (double x : {1e7, -1e7, 123.456, -0.25, 7.0, 1e3 * kTwoPi + 0.5}) {
    const double v = wrap_angle(x);
    CHECK(v >= 0.0);
    CHECK(v < kTwoPi);
    // same angle: the shift is a whole number of turns
    const double turns = (x - v) / kTwoPi;
    CHECK(std::abs(turns - std::round(turns)) < 1e-6);
  }
}

TEST_CASE("wrap_to_pi lands in (-pi, pi]") {
  const double pi = kTwoPi / 2.0;
  CHECK(wrap_to_pi(0.1) == doctest::Approx(0.1));
  CHECK(wrap_to_pi(3.0 * pi / 2.0) == doctest::Approx(-pi / 2.0));
  CHECK(wrap_to_pi(pi) == doctest::Approx(pi));
  CHECK(wrap_to_pi(-pi) == doctest::Approx(pi));
  CHECK(wrap_to_pi(kTwoPi + 0.3) == doctest::Approx(0.3));
  for (double x : {-9.9, -1.0, 0.0, 2.5, 55.3}) {
    const double v = wrap_to_pi(x);
    CHECK(v > -pi - 1e-15);
    CHECK(v <= pi);
  }
}

TEST_CASE("Tensor3 layout keeps the last index contiguous") {
  Tensor3<double> t(2, 3, 4);
  CHECK(t.size() == 24);
  t(1, 2, 3) = 7.5;
  CHECK(t.data()[(1 * 3 + 2) * 4 + 3] == 7.5);
  t(0, 0, 0) = -1.0;
  CHECK(t.data()[0] == -1.0);

  Tensor3<double> u = t;
  CHECK(u == t);
  u(1, 1, 1) = 9.0;
  CHECK(!(u == t));
}

TEST_CASE("unordered pair counting") {
  CHECK(unordered_pair_count(1) == 0);
  CHECK(unordered_pair_count(2) == 1);
  CHECK(unordered_pair_count(10) == 45);
  CHECK(unordered_pair_count(91) == 4095);
}

TEST_CASE("Error carries its kind") {
  try {
    fail(ErrorKind::Parse, "boom");
    FAIL("unreachable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()) == "boom");
  }
}
