#include <cmath>
#include <vector>

#include "doctest.h"

#include "core/gibbs.hpp"
#include "core/phase_data.hpp"
#include "core/rng.hpp"
#include "core/spline.hpp"
#include "core/wrapped_normal.hpp"
#include "support/testlib.hpp"

using namespace cfm;
using testlib::mean_within;
using testlib::second_moment_within;

namespace {

PhaseDataset filler_data(size_t n, size_t p, size_t t, uint64_t seed = 500) {
  PhaseDataset data(n, p, TimeGrid::uniform01(t));
  Rng rng(seed);
  for (double& v : data.values()) v = rng.uniform() * kTwoPi;
  return data;
}

// Sampler over random valid data with an equally-spaced-knot basis.
struct Fixture {
  PhaseDataset data;
  BasisMatrix basis;
  GibbsSampler sampler;

  Fixture(size_t n, size_t p, size_t t, int degree, size_t knots, Hyperparams hyper = {},
          uint64_t data_seed = 500)
      : data(filler_data(n, p, t, data_seed)),
        basis(evaluate_basis_grid(make_spline_config(degree, knots), TimeGrid::uniform01(t))),
        sampler(data, basis, hyper) {}
};

}  // namespace

TEST_CASE("construction guards") {
  const PhaseDataset data = filler_data(2, 2, 6);
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(1, 0), TimeGrid::uniform01(6));

  Hyperparams bad;
  bad.b0 = 0.0;
  CHECK(testlib::error_kind([&] { GibbsSampler(data, basis, bad); }) ==
        ErrorKind::InvalidArgument);

  const BasisMatrix other_grid =
      evaluate_basis_grid(make_spline_config(1, 0), TimeGrid::uniform01(7));
  CHECK(testlib::error_kind([&] { GibbsSampler(data, other_grid, Hyperparams{}); }) ==
        ErrorKind::Validation);

  const PhaseDataset tiny = filler_data(1, 1, 4);
  const BasisMatrix wide = evaluate_basis_grid(make_spline_config(3, 2), TimeGrid::uniform01(4));
  CHECK(testlib::error_kind([&] { GibbsSampler(tiny, wide, Hyperparams{}); }) ==
        ErrorKind::Validation);  // more basis functions than time points
}

TEST_CASE("initial state: deterministic, well-formed, near the data") {
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(2, 2), TimeGrid::uniform01(40));
  SimulateOverrides fixed;
  fixed.beta = std::vector<double>{0.5, 1.5, -0.8, 2.0, 1.0};
  fixed.tau2 = std::vector<double>(5, 0.0);
  fixed.gamma2 = std::vector<double>(5, 0.0);
  fixed.sigma2 = 0.0;
  const auto [data, truth] = simulate_dataset(2, 2, basis, Hyperparams{}, 81, fixed);

  GibbsSampler sampler(data, basis, Hyperparams{});
  const ModelState st = sampler.initial_state();

  CHECK(st.sigma2 == 0.25);
  for (double v : st.tau2) CHECK(v == 1.0);
  for (double v : st.gamma2) CHECK(v == 1.0);
  for (size_t i = 0; i < st.wraps.size(); ++i) CHECK(st.wraps.data()[i] == 0);

  // noiseless curves inside one wrap: the least-squares start sits on the data
  for (size_t s = 0; s < 2; ++s)
    for (size_t k = 0; k < 2; ++k) {
      const auto fit = sampler.fitted_curve(st, s, k);
      for (size_t j = 0; j < 40; ++j)
        CHECK(std::abs(wrap_to_pi(fit[j] - data.at(s, k, j))) < 1e-6);
    }

  // channel means average the subjects; population levels average the channels
  const size_t big = basis.size();
  for (size_t k = 0; k < 2; ++k)
    for (size_t l = 0; l < big; ++l) {
      const double want = 0.5 * (st.coeffs(0, k, l) + st.coeffs(1, k, l));
      CHECK(st.mu.at(k, l) == doctest::Approx(want).epsilon(1e-12));
    }
  for (size_t l = 0; l < big; ++l)
    CHECK(st.beta[l] == doctest::Approx(0.5 * (st.mu.at(0, l) + st.mu.at(1, l))).epsilon(1e-12));
}

TEST_CASE("channel mean conditional: analytic moments") {
  Fixture fx(2, 1, 4, 0, 0);
  ModelState st = fx.sampler.initial_state();
  st.coeffs(0, 0, 0) = 1.0;
  st.coeffs(1, 0, 0) = 2.0;
  st.tau2 = {1.0};
  st.gamma2 = {1.0};
  st.beta = {0.0};

  // precision 2/1 + 1/1 = 3, mean (3 + 0)/3 = 1, variance 1/3
  const size_t n = 100000;
  std::vector<double> draws(n);
  for (size_t i = 0; i < n; ++i) {
    fx.sampler.update_channel_means(st, 901, i);
    draws[i] = st.mu.at(0, 0);
  }
  CHECK(mean_within(draws, 1.0));
  CHECK(second_moment_within(draws, 4.0 / 3.0));

  // huge channel spread: the prior drops out, the mean is the coefficient average
  st.gamma2 = {1e12};
  st.beta = {55.0};
  for (size_t i = 0; i < n; ++i) {
    fx.sampler.update_channel_means(st, 902, i);
    draws[i] = st.mu.at(0, 0);
  }
  CHECK(mean_within(draws, 1.5));
}

TEST_CASE("population level conditional: analytic moments") {
  Hyperparams hyper;
  hyper.a0 = 0.0;
  hyper.b0 = 1.0;
  Fixture fx(1, 1, 4, 0, 0, hyper);
  ModelState st = fx.sampler.initial_state();
  st.mu.at(0, 0) = 2.0;
  st.gamma2 = {1.0};

  // precision 1/1 + 1/1 = 2, mean (2 + 0)/2 = 1, variance 1/2
  const size_t n = 100000;
  std::vector<double> draws(n);
  for (size_t i = 0; i < n; ++i) {
    fx.sampler.update_population_levels(st, 903, i);
    draws[i] = st.beta[0];
  }
  CHECK(mean_within(draws, 1.0));
  CHECK(second_moment_within(draws, 1.5));

  // diffuse prior limit: the mean tends to the channel average
  Hyperparams flat;
  flat.b0 = 1e12;
  Fixture fx2(1, 1, 4, 0, 0, flat);
  ModelState st2 = fx2.sampler.initial_state();
  st2.mu.at(0, 0) = 2.0;
  st2.gamma2 = {1.0};
  for (size_t i = 0; i < n; ++i) {
    fx2.sampler.update_population_levels(st2, 904, i);
    draws[i] = st2.beta[0];
  }
  CHECK(mean_within(draws, 2.0));
}

TEST_CASE("subject spread conditional: inverse gamma moments") {
  Hyperparams hyper;
  hyper.nu_tau = 2.0;
  hyper.eta_tau = 1.0;
  Fixture fx(1, 1, 4, 0, 0, hyper);
  ModelState st = fx.sampler.initial_state();
  st.mu.at(0, 0) = 0.25;
  st.coeffs(0, 0, 0) = 0.25 + std::sqrt(2.0);  // squared residual 2

  // shape 2 + 1/2, rate 1 + 1: mean 2/1.5 = 4/3
  const size_t n = 100000;
  std::vector<double> draws(n);
  for (size_t i = 0; i < n; ++i) {
    fx.sampler.update_subject_spread(st, 905, i);
    draws[i] = st.tau2[0];
  }
  for (double v : draws) REQUIRE(v > 0.0);
  CHECK(mean_within(draws, 4.0 / 3.0));

  // zero residuals: rate stays at eta
  st.coeffs(0, 0, 0) = st.mu.at(0, 0);
  for (size_t i = 0; i < n; ++i) {
    fx.sampler.update_subject_spread(st, 906, i);
    draws[i] = st.tau2[0];
  }
  CHECK(mean_within(draws, 1.0 / 1.5));

  // fourth-moment-safe shape for the variance check: IG(6.5, 4)
  Hyperparams heavy;
  heavy.nu_tau = 6.0;
  heavy.eta_tau = 3.0;
  Fixture fx2(1, 1, 4, 0, 0, heavy);
  ModelState st2 = fx2.sampler.initial_state();
  st2.mu.at(0, 0) = 0.0;
  st2.coeffs(0, 0, 0) = std::sqrt(2.0);
  for (size_t i = 0; i < n; ++i) {
    fx2.sampler.update_subject_spread(st2, 907, i);
    draws[i] = st2.tau2[0];
  }
  CHECK(mean_within(draws, 4.0 / 5.5));
  CHECK(second_moment_within(draws, 16.0 / (5.5 * 4.5)));
}

TEST_CASE("channel spread conditional: inverse gamma moments") {
  Hyperparams hyper;
  hyper.nu_gamma = 2.0;
  hyper.eta_gamma = 1.0;
  Fixture fx(1, 1, 4, 0, 0, hyper);
  ModelState st = fx.sampler.initial_state();
  st.beta = {0.3};
  st.mu.at(0, 0) = 0.3 + std::sqrt(2.0);

  const size_t n = 100000;
  std::vector<double> draws(n);
  for (size_t i = 0; i < n; ++i) {
    fx.sampler.update_channel_spread(st, 908, i);
    draws[i] = st.gamma2[0];
  }
  CHECK(mean_within(draws, 4.0 / 3.0));

  Hyperparams heavy;
  heavy.nu_gamma = 6.0;
  heavy.eta_gamma = 3.0;
  Fixture fx2(1, 1, 4, 0, 0, heavy);
  ModelState st2 = fx2.sampler.initial_state();
  st2.beta = {0.0};
  st2.mu.at(0, 0) = std::sqrt(2.0);
  for (size_t i = 0; i < n; ++i) {
    fx2.sampler.update_channel_spread(st2, 909, i);
    draws[i] = st2.gamma2[0];
  }
  CHECK(mean_within(draws, 4.0 / 5.5));
  CHECK(second_moment_within(draws, 16.0 / (5.5 * 4.5)));
}

TEST_CASE("noise conditional: inverse gamma moments") {
  // zero residuals, T = 4: shape nu + npT/2 = 4, rate stays at eta = 2
  PhaseDataset data(1, 1, TimeGrid::uniform01(4));  // all phases zero
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(0, 0), TimeGrid::uniform01(4));
  GibbsSampler sampler(data, basis, Hyperparams{});
  ModelState st = sampler.initial_state();
  st.coeffs(0, 0, 0) = 0.0;

  const size_t n = 100000;
  std::vector<double> draws(n);
  for (size_t i = 0; i < n; ++i) {
    sampler.update_noise(st, 910, i);
    draws[i] = st.sigma2;
  }
  for (double v : draws) REQUIRE(v > 0.0);
  CHECK(mean_within(draws, 2.0 / 3.0));

  // constant residual 0.5 over T = 12: shape 8, rate 2 + 12*0.25/2 = 3.5
  PhaseDataset flat(1, 1, TimeGrid::uniform01(12));
  for (double& v : flat.values()) v = 0.5;
  const BasisMatrix basis12 =
      evaluate_basis_grid(make_spline_config(0, 0), TimeGrid::uniform01(12));
  GibbsSampler sampler12(flat, basis12, Hyperparams{});
  ModelState st12 = sampler12.initial_state();
  st12.coeffs(0, 0, 0) = 0.0;
  for (size_t i = 0; i < st12.wraps.size(); ++i) st12.wraps.data()[i] = 0;
  for (size_t i = 0; i < n; ++i) {
    sampler12.update_noise(st12, 911, i);
    draws[i] = st12.sigma2;
  }
  CHECK(mean_within(draws, 3.5 / 7.0));
  CHECK(second_moment_within(draws, 3.5 * 3.5 / (7.0 * 6.0)));
}

TEST_CASE("coefficient conditional: prior limits") {
  PhaseDataset data(1, 1, TimeGrid::uniform01(5),
                    std::vector<double>{0.3, 1.2, 2.2, 3.1, 4.0});
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(0, 0), TimeGrid::uniform01(5));
  GibbsSampler sampler(data, basis, Hyperparams{});
  ModelState st = sampler.initial_state();
  const int32_t wraps[5] = {0, 0, 1, 0, -1};
  for (size_t j = 0; j < 5; ++j) st.wraps(0, 0, j) = wraps[j];
  st.sigma2 = 1.0;

  double wbar = 0.0;
  for (size_t j = 0; j < 5; ++j) wbar += data.at(0, 0, j) + kTwoPi * wraps[j];
  wbar /= 5.0;

  // flat prior: posterior mean tends to the unwrapped sample mean
  st.tau2 = {1e12};
  st.mu.at(0, 0) = -100.0;
  const size_t n = 100000;
  std::vector<double> draws(n);
  for (size_t i = 0; i < n; ++i) {
    sampler.update_coefficients(st, 912, i, 1);
    draws[i] = st.coeffs(0, 0, 0);
    st.coeffs(0, 0, 0) = 0.0;  // the draw must not feed back
  }
  CHECK(mean_within(draws, wbar));

  // tight prior: the channel mean wins
  st.tau2 = {1e-12};
  st.mu.at(0, 0) = 0.7;
  for (size_t i = 0; i < n; ++i) {
    sampler.update_coefficients(st, 913, i, 1);
    draws[i] = st.coeffs(0, 0, 0);
    st.coeffs(0, 0, 0) = 0.0;
  }
  for (double v : draws) CHECK(std::abs(v - 0.7) < 1e-4);
  CHECK(std::abs(testlib::mean(draws) - 0.7) < 1e-5);
}

TEST_CASE("coefficient conditional: dense-solve oracle on a fixed case") {
  PhaseDataset data(1, 1, TimeGrid::uniform01(5),
                    std::vector<double>{0.3, 5.9, 2.0, 0.01, 4.4});
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(1, 0), TimeGrid::uniform01(5));
  GibbsSampler sampler(data, basis, Hyperparams{});
  ModelState st = sampler.initial_state();
  const int32_t wraps[5] = {0, -1, 2, 0, 1};
  for (size_t j = 0; j < 5; ++j) st.wraps(0, 0, j) = wraps[j];
  st.sigma2 = 0.3;
  st.tau2 = {0.7, 1.3};
  st.mu.at(0, 0) = 0.4;
  st.mu.at(0, 1) = -0.2;

  // the posterior the sampler must follow, via an independent solver
  Mat prec(2, 2);
  std::vector<double> rhs(2, 0.0);
  for (size_t j = 0; j < 5; ++j) {
    const double b0 = basis.by_time.at(j, 0), b1 = basis.by_time.at(j, 1);
    prec.at(0, 0) += b0 * b0 / 0.3;
    prec.at(0, 1) += b0 * b1 / 0.3;
    prec.at(1, 1) += b1 * b1 / 0.3;
    const double w = data.at(0, 0, j) + kTwoPi * wraps[j];
    rhs[0] += b0 * w / 0.3;
    rhs[1] += b1 * w / 0.3;
  }
  prec.at(1, 0) = prec.at(0, 1);
  prec.at(0, 0) += 1.0 / 0.7;
  prec.at(1, 1) += 1.0 / 1.3;
  rhs[0] += 0.4 / 0.7;
  rhs[1] += -0.2 / 1.3;
  const auto want_mean = testlib::gauss_solve(prec, rhs);
  const Mat want_cov = testlib::gauss_inverse(prec);

  const size_t n = 100000;
  std::vector<double> a0(n), a1(n), c00(n), c01(n), c11(n);
  for (size_t i = 0; i < n; ++i) {
    sampler.update_coefficients(st, 914, i, 1);
    a0[i] = st.coeffs(0, 0, 0);
    a1[i] = st.coeffs(0, 0, 1);
    const double d0 = a0[i] - want_mean[0], d1 = a1[i] - want_mean[1];
    c00[i] = d0 * d0;
    c01[i] = d0 * d1;
    c11[i] = d1 * d1;
    st.coeffs(0, 0, 0) = 0.0;
    st.coeffs(0, 0, 1) = 0.0;
  }
  CHECK(mean_within(a0, want_mean[0]));
  CHECK(mean_within(a1, want_mean[1]));
  CHECK(mean_within(c00, want_cov.at(0, 0)));
  CHECK(mean_within(c01, want_cov.at(0, 1)));
  CHECK(mean_within(c11, want_cov.at(1, 1)));
}

TEST_CASE("coefficient block: shared factor equals per-unit factorization, any thread count") {
  Fixture fx(3, 2, 10, 2, 0, Hyperparams{}, 501);
  ModelState start = fx.sampler.initial_state();
  start.tau2 = {0.5, 0.8, 1.2};
  start.sigma2 = 0.4;

  ModelState by_sampler = start;
  fx.sampler.update_coefficients(by_sampler, 99, 5, 1);

  ModelState by_threads = start;
  fx.sampler.update_coefficients(by_threads, 99, 5, 4);
  CHECK(by_sampler.coeffs == by_threads.coeffs);

  // mirror of the update that refactorizes the (identical) precision matrix
  // for every unit; must agree bit for bit
  ModelState mirror = start;
  const size_t big = fx.basis.size(), t = 10, p = 2;
  const double inv_noise = 1.0 / start.sigma2;  // multiply, exactly as the update does
  Mat prec = fx.sampler.gram();
  for (double& v : prec.v) v *= inv_noise;
  for (size_t l = 0; l < big; ++l) prec.at(l, l) += 1.0 / start.tau2[l];

  for (size_t unit = 0; unit < 3 * p; ++unit) {
    const size_t s = unit / p, k = unit % p;
    const auto chol = Cholesky::factor(prec);  // rebuilt per unit on purpose
    REQUIRE(chol.has_value());
    std::vector<double> rhs(big, 0.0);
    for (size_t j = 0; j < t; ++j) {
      const double w = fx.data.at(s, k, j) + kTwoPi * mirror.wraps(s, k, j);
      for (size_t l = 0; l < big; ++l) rhs[l] += fx.basis.by_time.at(j, l) * w;
    }
    for (size_t l = 0; l < big; ++l)
      rhs[l] = rhs[l] * inv_noise + mirror.mu.at(k, l) / start.tau2[l];
    chol->solve(rhs);
    Rng rng = Rng::substream(99, 5, kBlockCoeffs, unit);
    std::vector<double> z(big);
    for (size_t l = 0; l < big; ++l) z[l] = rng.normal();
    chol->solve_upper_transpose(z);
    for (size_t l = 0; l < big; ++l) mirror.coeffs(s, k, l) = rhs[l] + z[l];
  }
  CHECK(by_sampler.coeffs == mirror.coeffs);
}

TEST_CASE("wrap counts lock onto the dominant index") {
  PhaseDataset data(1, 1, TimeGrid::uniform01(6));
  for (double& v : data.values()) v = 0.2;
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(0, 0), TimeGrid::uniform01(6));
  GibbsSampler sampler(data, basis, Hyperparams{});
  ModelState st = sampler.initial_state();
  st.coeffs(0, 0, 0) = 0.2 + 5.0 * kTwoPi;  // five turns above the data
  st.sigma2 = 0.01;

  sampler.update_wrap_counts(st, 915, 0, 1);
  for (size_t j = 0; j < 6; ++j) CHECK(st.wraps(0, 0, j) == 5);

  // multi-threaded pass bit-matches
  ModelState st4 = sampler.initial_state();
  st4.coeffs(0, 0, 0) = 0.2 + 5.0 * kTwoPi;
  st4.sigma2 = 0.01;
  sampler.update_wrap_counts(st4, 915, 0, 4);
  CHECK(st.wraps == st4.wraps);
}

TEST_CASE("chain shape, reproducibility and thread invariance") {
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(1, 1), TimeGrid::uniform01(12));
  const PhaseDataset data = filler_data(2, 2, 12, 502);

  ChainConfig cfg;
  cfg.burnin = 5;
  cfg.samples = 10;
  cfg.thin = 3;
  cfg.seed = 77;
  cfg.threads = 1;

  const PosteriorChain chain = run_chain(data, basis, Hyperparams{}, cfg);
  const size_t big = basis.size();
  CHECK(chain.draws == 3);  // every third of ten post-burn-in sweeps
  CHECK(chain.sigma2_draws.size() == 3);
  CHECK(chain.beta_trace.size() == 3 * big);
  CHECK(chain.tau2_trace.size() == 3 * big);
  CHECK(chain.gamma2_trace.size() == 3 * big);
  CHECK(chain.coeff_draws.size() == 3 * 2 * 2 * big);
  CHECK(chain.wrap_draws.size() == 3 * 2 * 2 * 12);
  CHECK(chain.config == cfg);
  CHECK(chain.basis == basis.config);
  for (double v : chain.sigma2_draws) CHECK(v > 0.0);
  for (double v : chain.tau2_trace) CHECK(v > 0.0);
  for (double v : chain.gamma2_trace) CHECK(v > 0.0);

  const PosteriorChain again = run_chain(data, basis, Hyperparams{}, cfg);
  CHECK(again.coeff_draws == chain.coeff_draws);
  CHECK(again.wrap_draws == chain.wrap_draws);
  CHECK(again.sigma2_draws == chain.sigma2_draws);
  CHECK(again.beta_trace == chain.beta_trace);

  ChainConfig threaded = cfg;
  threaded.threads = 4;
  const PosteriorChain wide = run_chain(data, basis, Hyperparams{}, threaded);
  CHECK(wide.coeff_draws == chain.coeff_draws);
  CHECK(wide.wrap_draws == chain.wrap_draws);
  CHECK(wide.sigma2_draws == chain.sigma2_draws);

  ChainConfig other = cfg;
  other.seed = 78;
  CHECK(run_chain(data, basis, Hyperparams{}, other).sigma2_draws != chain.sigma2_draws);

  ChainConfig bad = cfg;
  bad.samples = 0;
  CHECK(testlib::error_kind([&] { run_chain(data, basis, Hyperparams{}, bad); }) ==
        ErrorKind::InvalidArgument);
  bad = cfg;
  bad.burnin = -1;
  CHECK(testlib::error_kind([&] { run_chain(data, basis, Hyperparams{}, bad); }) ==
        ErrorKind::InvalidArgument);
  bad = cfg;
  bad.thin = 0;
  CHECK(testlib::error_kind([&] { run_chain(data, basis, Hyperparams{}, bad); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("degenerate data pins the noise at the prior floor") {
  const BasisMatrix basis = evaluate_basis_grid(make_spline_config(1, 0), TimeGrid::uniform01(24));
  SimulateOverrides fixed;
  fixed.beta = std::vector<double>{0.3, 2.0};
  fixed.tau2 = std::vector<double>(2, 0.0);
  fixed.gamma2 = std::vector<double>(2, 0.0);
  fixed.sigma2 = 0.0;
  const auto [data, truth] = simulate_dataset(2, 2, basis, Hyperparams{}, 83, fixed);

  ChainConfig cfg;
  cfg.burnin = 50;
  cfg.samples = 50;
  cfg.seed = 84;
  const PosteriorChain chain = run_chain(data, basis, Hyperparams{}, cfg);
  const double post_mean = testlib::mean(chain.sigma2_draws);
  // residuals vanish, so sigma2 hovers near eta / (shape - 1) = 2/97
  CHECK(post_mean > 0.0);
  CHECK(post_mean < 0.1);
}

TEST_CASE("joint consistency: prior moments are reproduced") {
  const auto trace = testlib::joint_consistency_chain(12000, 2000, 31415);

  const auto check_pair = [](const std::vector<double>& x, double want_mean, double want_m2,
                             const char* label) {
    INFO(label);
    const double se1 = testlib::batch_se(x);
    CHECK(std::abs(testlib::mean(x) - want_mean) <= 3.0 * se1 + 1e-12);
    std::vector<double> sq(x.size());
    for (size_t i = 0; i < x.size(); ++i) sq[i] = x[i] * x[i];
    const double se2 = testlib::batch_se(sq);
    CHECK(std::abs(testlib::mean(sq) - want_m2) <= 3.0 * se2 + 1e-12);
  };

  // beta ~ N(0, 1/2); the variances are IG(5, 4): mean 1, second moment 4/3
  check_pair(trace.beta, 0.0, 0.5, "population level");
  check_pair(trace.tau2, 1.0, 4.0 / 3.0, "subject spread");
  check_pair(trace.gamma2, 1.0, 4.0 / 3.0, "channel spread");
  check_pair(trace.sigma2, 1.0, 4.0 / 3.0, "observation noise");
}
