#include "core/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

namespace cfm {

namespace {

constexpr double kPi = kTwoPi / 2.0;

std::vector<double> parse_numeric_row(const std::string& line, const std::string& path,
                                      size_t lineno) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= line.size()) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) comma = line.size();
    std::string_view tok(line.data() + start, comma - start);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.front())))
      tok.remove_prefix(1);
    while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
      tok.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      fail(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": expected a number, got '" +
                                 std::string(tok) + "'");
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

// Forward-prediction coefficients by Burg's recursion: x[t] is predicted by
// sum_i a[i] * x[t - 1 - i].  Stops early once the residual is negligible,
// so a pure tone yields its exact two-term recurrence.
std::vector<double> burg_coeffs(const double* x, size_t n, size_t max_order) {
  std::vector<double> f(x, x + n), b(x, x + n);
  std::vector<double> a;
  double energy = 0.0;
  for (size_t t = 0; t < n; ++t) energy += x[t] * x[t];
  if (energy <= 0.0) return a;

  for (size_t m = 1; m <= max_order && m < n; ++m) {
    double num = 0.0, den = 0.0;
    for (size_t t = m; t < n; ++t) {
      num += f[t] * b[t - 1];
      den += f[t] * f[t] + b[t - 1] * b[t - 1];
    }
    if (!(den > 0.0) || !std::isfinite(den)) break;
    const double k = 2.0 * num / den;
    for (size_t t = n - 1; t >= m; --t) {
      const double ft = f[t], bt = b[t - 1];
      f[t] = ft - k * bt;
      b[t] = bt - k * ft;
    }
    std::vector<double> next(m);
    for (size_t i = 0; i + 1 < m; ++i) next[i] = a[i] - k * a[m - 2 - i];
    next[m - 1] = k;
    a = std::move(next);

    double resid = 0.0;
    for (size_t t = m; t < n; ++t) resid += f[t] * f[t];
    if (resid <= 1e-24 * energy) break;
  }
  return a;
}

// Extend a record by linear prediction on both sides.  Tones and smooth
// trends continue coherently, so a later filter or transform sees no edge
// discontinuity.  Blows up are clipped back to a plain mirror.
std::vector<double> predictive_pad(const double* x, size_t n, size_t pad) {
  constexpr size_t kMaxOrder = 16;
  const std::vector<double> a = burg_coeffs(x, n, std::min(kMaxOrder, n / 4));

  double peak = 0.0;
  for (size_t t = 0; t < n; ++t) peak = std::max(peak, std::abs(x[t]));
  const double limit = 4.0 * peak;

  std::vector<double> out(n + 2 * pad, 0.0);
  for (size_t t = 0; t < n; ++t) out[pad + t] = x[t];

  auto extend = [&](auto sample, auto store) {
    bool sane = true;
    for (size_t j = 0; j < pad && sane; ++j) {
      double v = 0.0;
      for (size_t i = 0; i < a.size(); ++i) {
        const int64_t back = static_cast<int64_t>(n) + static_cast<int64_t>(j) -
                             static_cast<int64_t>(i) - 1;
        v += a[i] * (back < static_cast<int64_t>(n) ? sample(back) : store(back));
      }
      if (!std::isfinite(v) || std::abs(v) > limit) sane = false;
      store(static_cast<int64_t>(n) + static_cast<int64_t>(j)) = v;
    }
    if (!sane)  // fall back to mirroring (pad <= n - 1 is checked by callers)
      for (size_t j = 0; j < pad; ++j)
        store(static_cast<int64_t>(n) + static_cast<int64_t>(j)) =
            sample(static_cast<int64_t>(n) - 2 - static_cast<int64_t>(j));
  };

  // forward off the right edge
  extend([&](int64_t t) -> double { return x[t]; },
         [&](int64_t t) -> double& { return out[pad + static_cast<size_t>(t)]; });
  // backward off the left edge: run the same recursion on the reversed record
  extend([&](int64_t t) -> double { return x[n - 1 - static_cast<size_t>(t)]; },
         [&](int64_t t) -> double& {
           return out[pad - 1 - (static_cast<size_t>(t) - n)];
         });
  return out;
}

// causal FIR pass, in place semantics via copy
std::vector<double> fir_pass(const std::vector<double>& x, const std::vector<double>& h) {
  const size_t n = x.size(), k = h.size();
  std::vector<double> y(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const size_t kmax = std::min(k, i + 1);
    for (size_t m = 0; m < kmax; ++m) acc += h[m] * x[i - m];
    y[i] = acc;
  }
  return y;
}

}  // namespace

RawSignal load_signal_csv(const std::string& path, double fs) {
  if (!(fs > 0.0)) fail(ErrorKind::InvalidArgument, "sampling rate must be positive");
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    rows.push_back(parse_numeric_row(line, path, lineno));
    if (rows.back().size() != rows.front().size())
      fail(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": ragged row");
  }
  if (rows.empty()) fail(ErrorKind::Parse, path + ": no samples");
  RawSignal sig;
  sig.fs = fs;
  sig.samples = Mat(rows.front().size(), rows.size());
  for (size_t j = 0; j < rows.size(); ++j)
    for (size_t c = 0; c < rows[j].size(); ++c) sig.samples.at(c, j) = rows[j][c];
  return sig;
}

void check_band(const BandSpec& band, double fs) {
  if (!(fs > 0.0)) fail(ErrorKind::InvalidArgument, "sampling rate must be positive");
  if (!(band.low > 0.0) || !(band.high > band.low) || !(band.high < fs / 2.0))
    fail(ErrorKind::InvalidArgument,
         "band edges must satisfy 0 < low < high < fs/2");
}

std::vector<double> design_bandpass(double fs, const BandSpec& band) {
  check_band(band, fs);
  const int64_t order = 2 * std::llround(2.0 * fs / band.low);
  const size_t taps = static_cast<size_t>(order) + 1;
  const double w_lo = kTwoPi * band.low / fs;
  const double w_hi = kTwoPi * band.high / fs;
  const size_t c = static_cast<size_t>(order) / 2;

  std::vector<double> h(taps);
  for (size_t i = 0; i < taps; ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(c);
    double ideal;
    if (i == c)
      ideal = (w_hi - w_lo) / kPi;
    else
      ideal = (std::sin(w_hi * m) - std::sin(w_lo * m)) / (kPi * m);
    const double window =
        0.54 - 0.46 * std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(order));
    h[i] = ideal * window;
  }
  return h;
}

RawSignal bandpass_filter(const RawSignal& in, const BandSpec& band) {
  const auto h = design_bandpass(in.fs, band);
  const size_t n = in.samples.cols;
  const size_t pad = h.size();
  if (n < 2) fail(ErrorKind::InvalidArgument, "signal too short to filter");
  if (pad > n - 1)
    fail(ErrorKind::InvalidArgument,
         "signal too short for the designed filter (" + std::to_string(h.size()) + " taps)");

  RawSignal out;
  out.fs = in.fs;
  out.samples = Mat(in.samples.rows, n);

  for (size_t ch = 0; ch < in.samples.rows; ++ch) {
    const std::vector<double> padded = predictive_pad(&in.samples.v[ch * n], n, pad);
    auto forward = fir_pass(padded, h);
    std::reverse(forward.begin(), forward.end());
    auto backward = fir_pass(forward, h);
    std::reverse(backward.begin(), backward.end());
    for (size_t j = 0; j < n; ++j) out.samples.at(ch, j) = backward[pad + j];
  }
  return out;
}

std::vector<std::complex<double>> analytic_signal(std::span<const double> x) {
  const size_t n = x.size();
  if (n < 2) fail(ErrorKind::InvalidArgument, "analytic signal needs at least two samples");

  fftw_complex* buf = fftw_alloc_complex(n);
  fftw_complex* spec = fftw_alloc_complex(n);
  for (size_t i = 0; i < n; ++i) {
    buf[i][0] = x[i];
    buf[i][1] = 0.0;
  }
  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, spec, FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);

  // one-sided multiplier
  const size_t half = n / 2;
  std::vector<double> mult(n, 0.0);
  mult[0] = 1.0;
  if (n % 2 == 0) {
    mult[half] = 1.0;
    for (size_t m = 1; m < half; ++m) mult[m] = 2.0;
  } else {
    for (size_t m = 1; m <= half; ++m) mult[m] = 2.0;
  }
  for (size_t m = 0; m < n; ++m) {
    spec[m][0] *= mult[m];
    spec[m][1] *= mult[m];
  }

  fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(n), spec, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  std::vector<std::complex<double>> out(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) out[i] = {buf[i][0] * scale, buf[i][1] * scale};
  fftw_free(buf);
  fftw_free(spec);
  return out;
}

PhaseDataset hilbert_phase(const RawSignal& in) {
  const size_t p = in.samples.rows, t = in.samples.cols;
  if (p == 0 || t < 2) fail(ErrorKind::InvalidArgument, "empty signal");
  PhaseDataset data(1, p, TimeGrid::uniform01(t));
  // The DFT treats the record as periodic; extending it first keeps the
  // wrap-around seam a record-length away from the samples we keep.
  const size_t pad = t - 1;
  for (size_t ch = 0; ch < p; ++ch) {
    const std::vector<double> padded = predictive_pad(&in.samples.v[ch * t], t, pad);
    const auto z = analytic_signal(padded);
    for (size_t j = 0; j < t; ++j) {
      const std::complex<double> zj = z[pad + j];
      double phase = 0.0;
      if (zj.real() != 0.0 || zj.imag() != 0.0)
        phase = wrap_angle(std::atan2(zj.imag(), zj.real()));
      data.at(0, ch, j) = phase;
    }
  }
  return data;
}

PhaseExtract extract_phase(const RawSignal& in, const BandSpec& band, size_t take) {
  const RawSignal filtered = bandpass_filter(in, band);
  const PhaseDataset full = hilbert_phase(filtered);
  const size_t t_full = full.times();

  PhaseExtract out;
  out.edge_guard = t_full / 10;
  if (take == 0 || take >= t_full) {
    out.data = full;
    return out;
  }
  if (take < 2) fail(ErrorKind::InvalidArgument, "need at least two samples after truncation");
  PhaseDataset cut(1, full.channels(), TimeGrid::uniform01(take));
  for (size_t k = 0; k < full.channels(); ++k)
    for (size_t j = 0; j < take; ++j) cut.at(0, k, j) = full.at(0, k, j);
  out.data = std::move(cut);
  return out;
}

}  // namespace cfm
