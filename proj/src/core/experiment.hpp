#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/json_config.hpp"
#include "core/phase_data.hpp"
#include "core/plv.hpp"

namespace cfm {

// Noise-robustness benchmark: perturb a clean dataset at increasing noise
// levels, re-estimate connectivity with both the naive estimator and the
// model, and score each method against the grand truth.

enum class NoiseKind { Gaussian, Uniform };

std::string noise_kind_name(NoiseKind kind);
NoiseKind noise_kind_from_name(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  double level = 0.1;  // scale b: N(0, b^2) or U(-b, b); must be positive
};

// Add iid noise to every entry and reduce back into [0, 2*pi). Draws come
// from a single stream in (subject, channel, time) order, so the result is
// a pure function of (data, spec, seed).
PhaseDataset inject_noise(const PhaseDataset& data, const NoiseSpec& spec, uint64_t seed);

// Strict upper triangle of a square matrix, pairs (k, k') with k < k' in
// row-major order. All pairwise metrics below use this ordering.
std::vector<double> upper_pairs(const Mat& m);

// decisions[i] = values[i] >= cut (closed comparison, matching the edge rule).
std::vector<bool> at_or_above(std::span<const double> values, double cut);

struct PairErrorStats {
  double mean = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

// Mean and pointwise 5%/95% quantiles of |estimate - truth| over the
// p(p-1)/2 unordered pairs.
PairErrorStats abs_error_stats(const Mat& truth, const Mat& estimate);

struct ClassMetrics {
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> tpr;  // absent when the truth has no positives
  std::optional<double> f1;   // absent when 2*TP + FP + FN is zero
};

// Score pairwise edge calls against the truth values: a pair is a true
// positive when truth >= threshold. Degenerate rates are reported as absent
// rather than silently zero.
ClassMetrics classification_metrics(std::span<const double> truth_pairs,
                                    const std::vector<bool>& decisions, double threshold = 0.7);

struct CalibrationBin {
  double lo = 0.0, hi = 0.0;
  size_t count = 0;
  double mean_p = 0.0;  // mean claimed probability; meaningful only when count > 0
  double freq = 0.0;    // observed event frequency; meaningful only when count > 0
};

// Reliability table over the probability bins [0,.2), [.2,.4), [.4,.6),
// [.6,.8), [.8,1]: per bin, the mean claimed probability and the fraction of
// members whose event actually happened. Empty bins stay in the table with
// count 0. A well calibrated forecaster puts freq close to mean_p.
std::array<CalibrationBin, 5> calibration_table(std::span<const double> prob,
                                                const std::vector<bool>& outcome);

struct ExperimentConfig {
  // Clean data: a measured dataset when `base` is set, otherwise a dataset
  // simulated from `synth`. Synthetic runs know the exact generative truth.
  std::optional<PhaseDataset> base;
  SimulateSpec synth;

  SplineConfig fit_basis;
  Hyperparams fit_hyper;
  // Sweep counts and thread budget for every fit in the run. The chain seed
  // is ignored: each cell derives its own seed from `seed` below.
  ChainConfig chain;

  std::vector<NoiseKind> kinds{NoiseKind::Gaussian, NoiseKind::Uniform};
  std::vector<double> levels{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  double threshold = 0.7;  // edge definition: PLV >= threshold
  double cut = 0.5;        // decision rule on the posterior exceedance
  uint64_t seed = 1;       // master seed for noise draws and per-cell chains
};

struct MethodMetrics {
  PairErrorStats err;
  ClassMetrics cls;
};

struct CellResult {
  NoiseKind kind = NoiseKind::Gaussian;
  double level = 0.0;
  MethodMetrics naive;
  MethodMetrics model;
  std::vector<double> exceed_p;               // posterior P(PLV >= threshold) per pair
  std::array<CalibrationBin, 5> calibration;  // exceed_p scored against the model truth
};

struct KindCalibration {
  NoiseKind kind = NoiseKind::Gaussian;
  std::array<CalibrationBin, 5> bins;  // pooled over every level of this kind
};

struct ExperimentReport {
  size_t subjects = 0, channels = 0, times = 0;
  bool synthetic = true;
  double threshold = 0.7, cut = 0.5;
  uint64_t seed = 1;

  // Grand truth per method. Synthetic runs use the PLV of the noiseless
  // generative curves for both; measured runs hold each method to its own
  // clean-data estimate, mirroring how the benchmark treats real recordings
  // (where the underlying truth is unknowable).
  Mat naive_truth;
  Mat model_truth;

  std::vector<CellResult> cells;        // one per (kind, level), kinds outermost
  std::vector<KindCalibration> pooled;  // calibration aggregated across levels

  nlohmann::json config_echo;  // the configuration that produced this report
};

// Run the full benchmark. Deterministic given the config (including seeds
// and thread counts; the result is in fact thread-count invariant).
ExperimentReport run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ExperimentReport& rep);

// Write report.json, curves.csv, table.csv and calibration.csv into `dir`
// (created if missing).
void write_report(const ExperimentReport& rep, const std::string& dir);

// JSON round trip for the config; the optional base dataset is not part of
// the JSON form (callers load it from its own file).
nlohmann::json experiment_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

// The tuned desk-scale benchmark: synthetic data (10 subjects, 10 channels,
// 100 time points) with enough strongly locked pairs for the edge metrics
// to be meaningful, Gaussian and uniform noise at b in {0.1, ..., 0.6}.
ExperimentConfig default_experiment_config();

}  // namespace cfm
