#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/phase_data.hpp"

namespace cfm {

// Raw multi-channel recording: one row per channel.
struct RawSignal {
  Mat samples;
  double fs = 0.0;
};

struct BandSpec {
  double low = 8.0;
  double high = 15.0;
};

// Headerless numeric CSV, one time point per row, one channel per column
// (same orientation as the phase table loader).
RawSignal load_signal_csv(const std::string& path, double fs);

void check_band(const BandSpec& band, double fs);

// Hamming-windowed sinc band-pass taps. The filter order is
// 2 * round(2 * fs / low) (even, so the group delay is integral); taps are
// symmetric, which the zero-phase pass below relies on.
std::vector<double> design_bandpass(double fs, const BandSpec& band);

// Zero-phase band-pass: the FIR is applied forward and backward over a
// reflection-padded copy (one filter length each side), so the passband
// response is squared and the phase response is identically zero.
RawSignal bandpass_filter(const RawSignal& in, const BandSpec& band);

// Analytic signal via the FFT multiplier method: keep the DC and Nyquist
// bins, double strictly positive frequencies, zero the negative half.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

// Instantaneous phase in [0, 2*pi) per channel; atan2(0, 0) maps to 0.
// The result is a one-subject dataset over a normalized grid.
PhaseDataset hilbert_phase(const RawSignal& in);

struct PhaseExtract {
  PhaseDataset data;
  size_t edge_guard = 0;  // leading/trailing samples considered boundary-unreliable (10%)
};

// Filter, transform and keep the first `take` samples (0 keeps everything).
PhaseExtract extract_phase(const RawSignal& in, const BandSpec& band, size_t take = 0);

}  // namespace cfm
