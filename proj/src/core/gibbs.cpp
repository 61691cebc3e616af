#include "core/gibbs.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>

#include "core/rng.hpp"
#include "core/wrapped_normal.hpp"

namespace cfm {

namespace {

// Static range split across a transient thread team. Work items must be
// independent; determinism comes from per-unit RNG substreams, not from the
// schedule.
template <typename F>
void parallel_for(int threads, size_t count, F&& fn) {
  if (threads <= 1 || count < 2) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const size_t nw = std::min<size_t>(static_cast<size_t>(threads), count);
  std::vector<std::thread> team;
  team.reserve(nw);
  for (size_t w = 0; w < nw; ++w) {
    team.emplace_back([&fn, w, nw, count] {
      for (size_t i = w; i < count; i += nw) fn(i);
    });
  }
  for (auto& th : team) th.join();
}

}  // namespace

GibbsSampler::GibbsSampler(PhaseDataset data, BasisMatrix basis, Hyperparams hyper)
    : data_(std::move(data)), basis_(std::move(basis)), hyper_(hyper) {
  data_.require_valid();
  if (!hyper_.valid()) fail(ErrorKind::InvalidArgument, "hyperparameters must be positive");
  if (basis_.times() != data_.times() || basis_.grid != data_.grid())
    fail(ErrorKind::Validation, "basis grid does not match the dataset grid");
  if (basis_.size() > data_.times())
    fail(ErrorKind::Validation, "basis has more functions than time points");

  const size_t big = basis_.size();
  const size_t t = basis_.times();
  gram_ = Mat(big, big);
  for (size_t j = 0; j < t; ++j)
    for (size_t l = 0; l < big; ++l) {
      const double bl = basis_.by_function.at(l, j);
      for (size_t m = 0; m <= l; ++m) gram_.at(l, m) += bl * basis_.by_function.at(m, j);
    }
  for (size_t l = 0; l < big; ++l)
    for (size_t m = l + 1; m < big; ++m) gram_.at(l, m) = gram_.at(m, l);
}

std::vector<double> GibbsSampler::fitted_curve(const ModelState& st, size_t s, size_t k) const {
  const size_t big = basis_.size();
  const size_t t = basis_.times();
  std::vector<double> fit(t, 0.0);
  for (size_t l = 0; l < big; ++l) {
    const double a = st.coeffs(s, k, l);
    const double* row = &basis_.by_function.v[l * t];
    for (size_t j = 0; j < t; ++j) fit[j] += a * row[j];
  }
  return fit;
}

ModelState GibbsSampler::initial_state() const {
  const size_t n = data_.subjects(), p = data_.channels(), t = data_.times();
  const size_t big = basis_.size();

  ModelState st;
  st.coeffs = Tensor3<double>(n, p, big);
  st.mu = Mat(p, big);
  st.beta.assign(big, 0.0);
  st.tau2.assign(big, 1.0);
  st.gamma2.assign(big, 1.0);
  st.sigma2 = 0.25;
  st.wraps = Tensor3<int32_t>(n, p, t, 0);

  auto chol = Cholesky::factor(gram_);
  if (!chol) fail(ErrorKind::Numeric, "basis Gram matrix is not positive definite");

  // Least squares on the continuity-unwrapped track of each series.  The
  // wrap counts start on the same track, otherwise the first coefficient
  // pass would regress on the folded values and could settle a region of
  // the curve one turn off.
  std::vector<double> track(t), rhs(big);
  for (size_t s = 0; s < n; ++s)
    for (size_t k = 0; k < p; ++k) {
      track[0] = data_.at(s, k, 0);
      for (size_t j = 1; j < t; ++j)
        track[j] = track[j - 1] + wrap_to_pi(data_.at(s, k, j) - data_.at(s, k, j - 1));
      std::fill(rhs.begin(), rhs.end(), 0.0);
      for (size_t j = 0; j < t; ++j) {
        const double w = track[j];
        for (size_t l = 0; l < big; ++l) rhs[l] += basis_.by_time.at(j, l) * w;
      }
      chol->solve(rhs);
      for (size_t l = 0; l < big; ++l) st.coeffs(s, k, l) = rhs[l];
      for (size_t j = 0; j < t; ++j)
        st.wraps(s, k, j) =
            static_cast<int32_t>(std::llround((track[j] - data_.at(s, k, j)) / kTwoPi));
    }

  for (size_t k = 0; k < p; ++k)
    for (size_t l = 0; l < big; ++l) {
      double acc = 0.0;
      for (size_t s = 0; s < n; ++s) acc += st.coeffs(s, k, l);
      st.mu.at(k, l) = acc / static_cast<double>(n);
    }
  for (size_t l = 0; l < big; ++l) {
    double acc = 0.0;
    for (size_t k = 0; k < p; ++k) acc += st.mu.at(k, l);
    st.beta[l] = acc / static_cast<double>(p);
  }
  return st;
}

void GibbsSampler::update_coefficients(ModelState& st, uint64_t seed, uint64_t sweep,
                                       int threads) const {
  const size_t n = data_.subjects(), p = data_.channels(), t = data_.times();
  const size_t big = basis_.size();
  const double inv_sigma2 = 1.0 / st.sigma2;

  // The precision matrix is shared by every subject-channel unit, so it is
  // factorized once per sweep.
  Mat prec = gram_;
  for (auto& x : prec.v) x *= inv_sigma2;
  for (size_t l = 0; l < big; ++l) prec.at(l, l) += 1.0 / st.tau2[l];
  const auto chol = Cholesky::factor(prec);
  if (!chol) fail(ErrorKind::Numeric, "coefficient precision matrix is not positive definite");

  parallel_for(threads, n * p, [&](size_t unit) {
    const size_t s = unit / p;
    const size_t k = unit % p;
    std::vector<double> rhs(big, 0.0);
    for (size_t j = 0; j < t; ++j) {
      const double w =
          data_.at(s, k, j) + kTwoPi * static_cast<double>(st.wraps(s, k, j));
      const double* row = &basis_.by_time.v[j * big];
      for (size_t l = 0; l < big; ++l) rhs[l] += row[l] * w;
    }
    for (size_t l = 0; l < big; ++l)
      rhs[l] = rhs[l] * inv_sigma2 + st.mu.at(k, l) / st.tau2[l];
    chol->solve(rhs);  // conditional mean

    Rng rng = Rng::substream(seed, sweep, kBlockCoeffs, unit);
    std::vector<double> z(big);
    for (size_t l = 0; l < big; ++l) z[l] = rng.normal();
    chol->solve_upper_transpose(z);  // covariance = precision^{-1}
    for (size_t l = 0; l < big; ++l) st.coeffs(s, k, l) = rhs[l] + z[l];
  });
}

void GibbsSampler::update_channel_means(ModelState& st, uint64_t seed, uint64_t sweep) const {
  const size_t n = data_.subjects(), p = data_.channels();
  const size_t big = basis_.size();
  for (size_t k = 0; k < p; ++k)
    for (size_t l = 0; l < big; ++l) {
      double sum = 0.0;
      for (size_t s = 0; s < n; ++s) sum += st.coeffs(s, k, l);
      const double prec = static_cast<double>(n) / st.tau2[l] + 1.0 / st.gamma2[l];
      const double mean = (sum / st.tau2[l] + st.beta[l] / st.gamma2[l]) / prec;
      Rng rng = Rng::substream(seed, sweep, kBlockChannelMeans, k * big + l);
      st.mu.at(k, l) = mean + rng.normal() / std::sqrt(prec);
    }
}

void GibbsSampler::update_population_levels(ModelState& st, uint64_t seed, uint64_t sweep) const {
  const size_t p = data_.channels();
  const size_t big = basis_.size();
  for (size_t l = 0; l < big; ++l) {
    double sum = 0.0;
    for (size_t k = 0; k < p; ++k) sum += st.mu.at(k, l);
    const double prec = static_cast<double>(p) / st.gamma2[l] + 1.0 / hyper_.b0;
    const double mean = (sum / st.gamma2[l] + hyper_.a0 / hyper_.b0) / prec;
    Rng rng = Rng::substream(seed, sweep, kBlockPopulation, l);
    st.beta[l] = mean + rng.normal() / std::sqrt(prec);
  }
}

void GibbsSampler::update_subject_spread(ModelState& st, uint64_t seed, uint64_t sweep) const {
  const size_t n = data_.subjects(), p = data_.channels();
  const size_t big = basis_.size();
  const double shape = hyper_.nu_tau + 0.5 * static_cast<double>(n * p);
  for (size_t l = 0; l < big; ++l) {
    double ss = 0.0;
    for (size_t s = 0; s < n; ++s)
      for (size_t k = 0; k < p; ++k) {
        const double d = st.coeffs(s, k, l) - st.mu.at(k, l);
        ss += d * d;
      }
    Rng rng = Rng::substream(seed, sweep, kBlockSubjectSpread, l);
    st.tau2[l] = rng.inv_gamma(shape, hyper_.eta_tau + 0.5 * ss);
  }
}

void GibbsSampler::update_channel_spread(ModelState& st, uint64_t seed, uint64_t sweep) const {
  const size_t p = data_.channels();
  const size_t big = basis_.size();
  const double shape = hyper_.nu_gamma + 0.5 * static_cast<double>(p);
  for (size_t l = 0; l < big; ++l) {
    double ss = 0.0;
    for (size_t k = 0; k < p; ++k) {
      const double d = st.mu.at(k, l) - st.beta[l];
      ss += d * d;
    }
    Rng rng = Rng::substream(seed, sweep, kBlockChannelSpread, l);
    st.gamma2[l] = rng.inv_gamma(shape, hyper_.eta_gamma + 0.5 * ss);
  }
}

void GibbsSampler::update_noise(ModelState& st, uint64_t seed, uint64_t sweep) const {
  const size_t n = data_.subjects(), p = data_.channels(), t = data_.times();
  const double shape = hyper_.nu_sigma + 0.5 * static_cast<double>(n * p * t);
  double ss = 0.0;
  for (size_t s = 0; s < n; ++s)
    for (size_t k = 0; k < p; ++k) {
      const auto fit = fitted_curve(st, s, k);
      for (size_t j = 0; j < t; ++j) {
        const double r = data_.at(s, k, j) - fit[j] + kTwoPi * static_cast<double>(st.wraps(s, k, j));
        ss += r * r;
      }
    }
  Rng rng = Rng::substream(seed, sweep, kBlockNoise, 0);
  st.sigma2 = rng.inv_gamma(shape, hyper_.eta_sigma + 0.5 * ss);
}

void GibbsSampler::update_wrap_counts(ModelState& st, uint64_t seed, uint64_t sweep,
                                      int threads) const {
  const size_t n = data_.subjects(), p = data_.channels(), t = data_.times();
  const int half_width = choose_truncation(st.sigma2);

  parallel_for(threads, n * p, [&](size_t unit) {
    const size_t s = unit / p;
    const size_t k = unit % p;
    const auto fit = fitted_curve(st, s, k);
    Rng rng = Rng::substream(seed, sweep, kBlockWraps, unit);
    for (size_t j = 0; j < t; ++j) {
      const double residual = data_.at(s, k, j) - fit[j];
      const int64_t z = sample_wrap_count(residual, st.sigma2, half_width, rng);
      if (z < std::numeric_limits<int32_t>::min() || z > std::numeric_limits<int32_t>::max())
        fail(ErrorKind::Numeric, "wrap count out of range; the chain has diverged");
      st.wraps(s, k, j) = static_cast<int32_t>(z);
    }
  });
}

void GibbsSampler::sweep(ModelState& st, uint64_t seed, uint64_t sweep_index, int threads) const {
  update_coefficients(st, seed, sweep_index, threads);
  update_channel_means(st, seed, sweep_index);
  update_population_levels(st, seed, sweep_index);
  update_subject_spread(st, seed, sweep_index);
  update_channel_spread(st, seed, sweep_index);
  update_noise(st, seed, sweep_index);
  update_wrap_counts(st, seed, sweep_index, threads);
}

PosteriorChain GibbsSampler::run(const ChainConfig& cfg) const {
  if (cfg.burnin < 0) fail(ErrorKind::InvalidArgument, "burnin must be non-negative");
  if (cfg.samples < 1) fail(ErrorKind::InvalidArgument, "samples must be positive");
  if (cfg.thin < 1) fail(ErrorKind::InvalidArgument, "thin must be positive");
  const int threads = cfg.threads < 1 ? 1 : cfg.threads;

  const size_t n = data_.subjects(), p = data_.channels(), t = data_.times();
  const size_t big = basis_.size();

  PosteriorChain chain;
  chain.subjects = n;
  chain.channels = p;
  chain.times = t;
  chain.basis_size = big;
  chain.config = cfg;
  chain.hyper = hyper_;
  chain.basis = basis_.config;
  chain.grid = basis_.grid;

  const size_t expected = static_cast<size_t>(cfg.samples / cfg.thin);
  chain.coeff_draws.reserve(expected * n * p * big);
  chain.wrap_draws.reserve(expected * n * p * t);
  chain.sigma2_draws.reserve(expected);
  chain.beta_trace.reserve(expected * big);
  chain.tau2_trace.reserve(expected * big);
  chain.gamma2_trace.reserve(expected * big);

  ModelState st = initial_state();
  const int64_t total = cfg.burnin + cfg.samples;
  for (int64_t it = 0; it < total; ++it) {
    sweep(st, cfg.seed, static_cast<uint64_t>(it), threads);
    if (it < cfg.burnin) continue;
    if ((it - cfg.burnin + 1) % cfg.thin != 0) continue;

    chain.coeff_draws.insert(chain.coeff_draws.end(), st.coeffs.data(),
                             st.coeffs.data() + st.coeffs.size());
    for (size_t i = 0; i < st.wraps.size(); ++i) {
      const int32_t z = st.wraps.data()[i];
      if (z < std::numeric_limits<int16_t>::min() || z > std::numeric_limits<int16_t>::max())
        fail(ErrorKind::Numeric, "wrap count exceeds the retained storage width");
      chain.wrap_draws.push_back(static_cast<int16_t>(z));
    }
    chain.sigma2_draws.push_back(st.sigma2);
    chain.beta_trace.insert(chain.beta_trace.end(), st.beta.begin(), st.beta.end());
    chain.tau2_trace.insert(chain.tau2_trace.end(), st.tau2.begin(), st.tau2.end());
    chain.gamma2_trace.insert(chain.gamma2_trace.end(), st.gamma2.begin(), st.gamma2.end());
    ++chain.draws;
  }
  return chain;
}

PosteriorChain run_chain(const PhaseDataset& data, const BasisMatrix& basis,
                         const Hyperparams& hyper, const ChainConfig& cfg) {
  return GibbsSampler(data, basis, hyper).run(cfg);
}

}  // namespace cfm
