#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/model_types.hpp"
#include "core/phase_data.hpp"
#include "core/spline.hpp"

namespace cfm {

// Substream identity of each conditional block. A unit draws from
// Rng::substream(seed, sweep, block, unit); exposing the block ids makes the
// derivation reproducible outside the sampler.
enum BlockId : uint64_t {
  kBlockCoeffs = 1,
  kBlockChannelMeans,
  kBlockPopulation,
  kBlockSubjectSpread,
  kBlockChannelSpread,
  kBlockNoise,
  kBlockWraps,
};

// Full parameter state of one sweep.
struct ModelState {
  Tensor3<double> coeffs;       // n x p x L subject-level basis coefficients
  Mat mu;                       // p x L channel means
  std::vector<double> beta;     // L population levels
  std::vector<double> tau2;     // L subject-level spreads
  std::vector<double> gamma2;   // L channel-level spreads
  double sigma2 = 0.25;         // wrapped observation noise
  Tensor3<int32_t> wraps;       // n x p x T wrap counts
};

// Retained draws. Coefficients, wrap counts and sigma2 carry the posterior
// phase reconstruction; the remaining parameters are kept as per-component
// traces for diagnostics.
struct PosteriorChain {
  size_t subjects = 0, channels = 0, times = 0, basis_size = 0, draws = 0;

  std::vector<double> coeff_draws;    // draws x n x p x L
  std::vector<int16_t> wrap_draws;    // draws x n x p x T
  std::vector<double> sigma2_draws;   // draws
  std::vector<double> beta_trace;     // draws x L
  std::vector<double> tau2_trace;     // draws x L
  std::vector<double> gamma2_trace;   // draws x L

  ChainConfig config;
  Hyperparams hyper;
  SplineConfig basis;
  TimeGrid grid;

  double coeff(size_t d, size_t s, size_t k, size_t l) const {
    return coeff_draws[((d * subjects + s) * channels + k) * basis_size + l];
  }
  int16_t wrap(size_t d, size_t s, size_t k, size_t j) const {
    return wrap_draws[((d * subjects + s) * channels + k) * times + j];
  }
};

// Gibbs sampler for the hierarchical wrapped-normal functional model.
//
// One sweep updates, in this order:
//   1. subject coefficients   (multivariate normal, shared precision factor)
//   2. channel means          (normal)
//   3. population levels      (normal)
//   4. subject-level spreads  (inverse gamma)
//   5. channel-level spreads  (inverse gamma)
//   6. observation noise      (inverse gamma)
//   7. wrap counts            (truncated discrete conditional)
//
// Every unit inside a block draws from an independent substream derived from
// (seed, sweep, block, unit), so sweeps are bit-reproducible regardless of
// the thread count.
class GibbsSampler {
 public:
  GibbsSampler(PhaseDataset data, BasisMatrix basis, Hyperparams hyper);

  // Deterministic starting point: wrap counts at zero, coefficients from a
  // least-squares fit of the continuity-unwrapped phase tracks, channel and
  // population levels from the coefficient means, unit spreads, sigma2 0.25.
  ModelState initial_state() const;

  void update_coefficients(ModelState& st, uint64_t seed, uint64_t sweep, int threads) const;
  void update_channel_means(ModelState& st, uint64_t seed, uint64_t sweep) const;
  void update_population_levels(ModelState& st, uint64_t seed, uint64_t sweep) const;
  void update_subject_spread(ModelState& st, uint64_t seed, uint64_t sweep) const;
  void update_channel_spread(ModelState& st, uint64_t seed, uint64_t sweep) const;
  void update_noise(ModelState& st, uint64_t seed, uint64_t sweep) const;
  void update_wrap_counts(ModelState& st, uint64_t seed, uint64_t sweep, int threads) const;

  void sweep(ModelState& st, uint64_t seed, uint64_t sweep_index, int threads) const;

  PosteriorChain run(const ChainConfig& cfg) const;

  const PhaseDataset& data() const { return data_; }
  const BasisMatrix& basis() const { return basis_; }
  const Hyperparams& hyper() const { return hyper_; }
  const Mat& gram() const { return gram_; }  // sum_j B_j B_j^T

  // Fitted level curve for one subject-channel under the current coefficients.
  std::vector<double> fitted_curve(const ModelState& st, size_t s, size_t k) const;

 private:
  PhaseDataset data_;
  BasisMatrix basis_;
  Hyperparams hyper_;
  Mat gram_;
};

// Convenience wrapper: validate, build the sampler and run it.
PosteriorChain run_chain(const PhaseDataset& data, const BasisMatrix& basis,
                         const Hyperparams& hyper, const ChainConfig& cfg);

// Chain container: binary ".cfc" payload next to a JSON sidecar
// ("<path>.json") holding dimensions, configuration and the seed.
void save_chain(const PosteriorChain& chain, const std::string& path);
PosteriorChain load_chain(const std::string& path);

}  // namespace cfm
