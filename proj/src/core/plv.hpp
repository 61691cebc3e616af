#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "core/gibbs.hpp"
#include "core/linalg.hpp"
#include "core/phase_data.hpp"

namespace cfm {

// Phase-locking value matrices. Entry (k, k') is the modulus of the mean
// unit phasor of the phase difference between channels k and k' over the
// grid; the diagonal is exactly 1 and the matrix is symmetric.

struct PlvEstimate {
  std::vector<Mat> per_subject;  // one p x p matrix per subject
  Mat averaged;                  // subject mean
};

// PLV of one subject from real-valued phase curves, p x T row-major.
// Adding any constant to a whole channel or 2*pi multiples anywhere leaves
// the result unchanged up to rounding.
Mat subject_plv(const double* phases, size_t channels, size_t times);

PlvEstimate naive_plv(const PhaseDataset& data);

// Subject-averaged PLV matrix per retained draw, reconstructed from the
// coefficient draws alone: the wrap-count term shifts phases by exact
// multiples of 2*pi and provably cancels. include_wrap_terms keeps that
// term anyway; it exists so tests can confirm the cancellation numerically.
std::vector<Mat> posterior_plv(const PosteriorChain& chain, const BasisMatrix& basis,
                               bool include_wrap_terms = false);

struct PairSummary {
  size_t k = 0, kprime = 0;
  double mean = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // central 95% interval
  double exceedance = 0.0;             // P(plv >= threshold | draws)
  bool edge = false;                   // exceedance >= decision cut
};

struct PlvSummary {
  double threshold = 0.7;
  double decision_cut = 0.5;
  size_t draws = 0;
  std::vector<PairSummary> pairs;  // unordered pairs, k < k'
};

// Pointwise posterior summary over PLV draws. Quantiles interpolate
// linearly between order statistics; the exceedance comparison and the
// edge cut are both closed (>=).
PlvSummary summarize_plv(const std::vector<Mat>& draws, double threshold = 0.7,
                         double decision_cut = 0.5);

// Empirical quantile with linear interpolation; input must be sorted.
double quantile_sorted(std::span<const double> sorted, double alpha);

void write_edges_csv(const PlvSummary& summary, const std::string& path);

}  // namespace cfm
