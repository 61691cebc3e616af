#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "core/common.hpp"
#include "core/grid.hpp"
#include "core/model_types.hpp"
#include "core/spline.hpp"

namespace cfm {

struct ValidationIssue {
  enum class Kind { OutOfRangePhase, DimensionMismatch, NonIncreasingGrid };
  Kind kind;
  size_t subject = 0, channel = 0, time = 0;  // first offender, scan order (s, k, j)
  std::string message;
};

// Phase observations for n subjects x p channels x T time points, each value
// in [0, 2*pi). Storage is row-major over (subject, channel, time).
class PhaseDataset {
 public:
  PhaseDataset() = default;
  PhaseDataset(size_t subjects, size_t channels, TimeGrid grid);
  PhaseDataset(size_t subjects, size_t channels, TimeGrid grid, std::vector<double> values);

  size_t subjects() const { return n_; }
  size_t channels() const { return p_; }
  size_t times() const { return grid_.count(); }
  const TimeGrid& grid() const { return grid_; }

  double& at(size_t s, size_t k, size_t j) { return values_[(s * p_ + k) * grid_.count() + j]; }
  double at(size_t s, size_t k, size_t j) const { return values_[(s * p_ + k) * grid_.count() + j]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  // First problem found, or nullopt when the dataset is well formed.
  std::optional<ValidationIssue> check() const;
  void require_valid() const;  // throws Error(Validation) on the first issue

  bool operator==(const PhaseDataset&) const = default;

 private:
  size_t n_ = 0, p_ = 0;
  TimeGrid grid_;
  std::vector<double> values_;
};

struct LoadOptions {
  bool wrap_on_load = false;  // reduce out-of-range values modulo 2*pi instead of failing
};

// Text format: either the long CSV layout with header
// "subject,channel,time_index,phase" (indices 0-based), or a headerless
// numeric table read as one subject with T rows x p columns.
PhaseDataset load_phase_csv(const std::string& path, const LoadOptions& opts = {});
void save_phase_csv(const PhaseDataset& data, const std::string& path);

// Binary container: magic "CFM1", then u32 n, p, T and n*p*T float64 values,
// row-major over (subject, channel, time), all little-endian.
PhaseDataset load_phase_binary(const std::string& path, const LoadOptions& opts = {});
void save_phase_binary(const PhaseDataset& data, const std::string& path);

// Dispatch on extension: ".cfm" binary, anything else CSV.
PhaseDataset load_dataset(const std::string& path, const LoadOptions& opts = {});
void save_dataset(const PhaseDataset& data, const std::string& path);

// Fixed values for any subset of the generative parameters; everything left
// unset is drawn from its prior. Vectors must have one entry per basis
// function. Fixed variances may be zero (degenerate point mass) but not
// negative.
struct SimulateOverrides {
  std::optional<std::vector<double>> beta;
  std::optional<std::vector<double>> tau2;
  std::optional<std::vector<double>> gamma2;
  std::optional<double> sigma2;
};

// What the simulator knows and an estimator is judged against.
struct GenerativeTruth {
  Tensor3<double> coeffs;  // n x p x L subject-level basis coefficients
  double sigma2 = 0.0;
  PhaseDataset clean;  // noiseless curves wrapped to [0, 2*pi)
};

// Draw a dataset from the hierarchical model over the basis grid.
// Draw order (fixed, so results are reproducible given the seed):
// beta, gamma2, tau2, sigma2, then channel means, subject coefficients and
// observation noise, each block in lexicographic index order.
std::pair<PhaseDataset, GenerativeTruth> simulate_dataset(size_t subjects, size_t channels,
                                                          const BasisMatrix& basis,
                                                          const Hyperparams& hyper, uint64_t seed,
                                                          const SimulateOverrides& fixed = {});

}  // namespace cfm
