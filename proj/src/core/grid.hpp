#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/common.hpp"

namespace cfm {

// Ordered sample times shared by every subject and channel. Analyses are
// invariant to the physical sampling rate, so the default grid is T equally
// spaced points on [0, 1]; rate information stays in file metadata.
struct TimeGrid {
  std::vector<double> points;

  static TimeGrid uniform01(size_t t) {
    if (t < 2) fail(ErrorKind::InvalidArgument, "time grid needs at least two points");
    TimeGrid g;
    g.points.resize(t);
    for (size_t j = 0; j < t; ++j) g.points[j] = static_cast<double>(j) / static_cast<double>(t - 1);
    return g;
  }

  size_t count() const { return points.size(); }

  bool strictly_increasing() const {
    for (size_t j = 1; j < points.size(); ++j)
      if (!(points[j] > points[j - 1])) return false;
    return true;
  }

  bool operator==(const TimeGrid&) const = default;
};

}  // namespace cfm
