#include "core/phase_data.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "core/rng.hpp"

namespace cfm {

namespace {

constexpr char kLongHeader[] = "subject,channel,time_index,phase";

[[noreturn]] void parse_fail(const std::string& path, size_t line, const std::string& what) {
  fail(ErrorKind::Parse, path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& path, size_t line, std::string_view tok) {
  double out = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc() || res.ptr != last)
    parse_fail(path, line, "expected a number, got '" + std::string(tok) + "'");
  return out;
}

uint64_t parse_index(const std::string& path, size_t line, std::string_view tok) {
  uint64_t out = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    parse_fail(path, line, "expected a non-negative integer, got '" + std::string(tok) + "'");
  return out;
}

std::vector<std::string_view> split_csv(std::string_view s) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

void apply_wrap_or_keep(PhaseDataset& data, bool wrap) {
  if (!wrap) return;
  for (double& v : data.values()) v = wrap_angle(v);
}

void put_u32_le(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64_le(std::string& out, double d) {
  const uint64_t v = std::bit_cast<uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

double get_f64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return std::bit_cast<double>(v);
}

}  // namespace

PhaseDataset::PhaseDataset(size_t subjects, size_t channels, TimeGrid grid)
    : n_(subjects), p_(channels), grid_(std::move(grid)), values_(n_ * p_ * grid_.count(), 0.0) {}

PhaseDataset::PhaseDataset(size_t subjects, size_t channels, TimeGrid grid,
                           std::vector<double> values)
    : n_(subjects), p_(channels), grid_(std::move(grid)), values_(std::move(values)) {}

std::optional<ValidationIssue> PhaseDataset::check() const {
  const size_t t = grid_.count();
  if (n_ == 0 || p_ == 0 || t < 2 || values_.size() != n_ * p_ * t) {
    ValidationIssue issue;
    issue.kind = ValidationIssue::Kind::DimensionMismatch;
    issue.message = "expected " + std::to_string(n_ * p_ * t) + " values for " +
                    std::to_string(n_) + " x " + std::to_string(p_) + " x " + std::to_string(t) +
                    ", have " + std::to_string(values_.size());
    return issue;
  }
  if (!grid_.strictly_increasing()) {
    ValidationIssue issue;
    issue.kind = ValidationIssue::Kind::NonIncreasingGrid;
    issue.message = "time grid is not strictly increasing";
    return issue;
  }
  for (size_t s = 0; s < n_; ++s)
    for (size_t k = 0; k < p_; ++k)
      for (size_t j = 0; j < t; ++j) {
        const double v = at(s, k, j);
        if (!(v >= 0.0) || !(v < kTwoPi)) {
          ValidationIssue issue;
          issue.kind = ValidationIssue::Kind::OutOfRangePhase;
          issue.subject = s;
          issue.channel = k;
          issue.time = j;
          std::ostringstream msg;
          msg << "phase " << v << " at (subject " << s << ", channel " << k << ", time " << j
              << ") is outside [0, 2*pi)";
          issue.message = msg.str();
          return issue;
        }
      }
  return std::nullopt;
}

void PhaseDataset::require_valid() const {
  if (auto issue = check()) fail(ErrorKind::Validation, issue->message);
}

PhaseDataset load_phase_csv(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");

  std::string line;
  size_t lineno = 0;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, path + ": file is empty");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  if (trim(line) == kLongHeader) {
    // Long layout. Rows may arrive in any order; every (s, k, j) cell must
    // appear exactly once.
    struct Row {
      uint64_t s, k, j;
      double phase;
    };
    std::vector<Row> rows;
    uint64_t max_s = 0, max_k = 0, max_j = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      const auto toks = split_csv(line);
      if (toks.size() != 4) parse_fail(path, lineno, "expected 4 comma-separated fields");
      Row r;
      r.s = parse_index(path, lineno, trim(toks[0]));
      r.k = parse_index(path, lineno, trim(toks[1]));
      r.j = parse_index(path, lineno, trim(toks[2]));
      r.phase = parse_double(path, lineno, trim(toks[3]));
      max_s = std::max(max_s, r.s);
      max_k = std::max(max_k, r.k);
      max_j = std::max(max_j, r.j);
      rows.push_back(r);
    }
    if (rows.empty()) fail(ErrorKind::Parse, path + ": no data rows after the header");
    const size_t n = max_s + 1, p = max_k + 1, t = max_j + 1;
    if (t < 2) fail(ErrorKind::Parse, path + ": need at least two time points");
    if (rows.size() != n * p * t)
      fail(ErrorKind::Parse, path + ": have " + std::to_string(rows.size()) + " rows but indices imply " +
                                 std::to_string(n * p * t));
    PhaseDataset data(n, p, TimeGrid::uniform01(t));
    std::vector<bool> seen(n * p * t, false);
    for (const Row& r : rows) {
      const size_t flat = (r.s * p + r.k) * t + r.j;
      if (seen[flat])
        fail(ErrorKind::Parse, path + ": duplicate cell (subject " + std::to_string(r.s) +
                                   ", channel " + std::to_string(r.k) + ", time " +
                                   std::to_string(r.j) + ")");
      seen[flat] = true;
      data.values()[flat] = r.phase;
    }
    apply_wrap_or_keep(data, opts.wrap_on_load);
    data.require_valid();
    return data;
  }

  // Headerless layout: numeric table, rows are time points, columns channels.
  std::vector<double> flat;
  size_t cols = 0, nrows = 0;
  // reparse the already-read first line
  std::vector<std::string> raw_lines{line};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    raw_lines.push_back(line);
  }
  size_t rawno = 0;
  for (const std::string& l : raw_lines) {
    ++rawno;
    if (trim(l).empty()) continue;
    const auto toks = split_csv(l);
    if (cols == 0) cols = toks.size();
    if (toks.size() != cols)
      parse_fail(path, rawno, "ragged row: expected " + std::to_string(cols) + " columns");
    for (const auto& tok : toks) flat.push_back(parse_double(path, rawno, trim(tok)));
    ++nrows;
  }
  if (nrows < 2) fail(ErrorKind::Parse, path + ": need at least two time points");

  // stored (time x channel); transpose into (subject=1, channel, time)
  PhaseDataset data(1, cols, TimeGrid::uniform01(nrows));
  for (size_t j = 0; j < nrows; ++j)
    for (size_t k = 0; k < cols; ++k) data.at(0, k, j) = flat[j * cols + k];
  apply_wrap_or_keep(data, opts.wrap_on_load);
  data.require_valid();
  return data;
}

void save_phase_csv(const PhaseDataset& data, const std::string& path) {
  data.require_valid();
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << kLongHeader << "\n";
  char buf[40];
  for (size_t s = 0; s < data.subjects(); ++s)
    for (size_t k = 0; k < data.channels(); ++k)
      for (size_t j = 0; j < data.times(); ++j) {
        // 17 significant digits round-trips every double exactly
        std::snprintf(buf, sizeof buf, "%.17g", data.at(s, k, j));
        out << s << ',' << k << ',' << j << ',' << buf << "\n";
      }
  if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");
}

PhaseDataset load_phase_binary(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "' for reading");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < 16 || blob.compare(0, 4, "CFM1") != 0)
    fail(ErrorKind::Parse, path + ": not a CFM1 phase container");
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  const uint32_t n = get_u32_le(p + 4);
  const uint32_t ch = get_u32_le(p + 8);
  const uint32_t t = get_u32_le(p + 12);
  const size_t count = static_cast<size_t>(n) * ch * t;
  if (blob.size() != 16 + count * 8)
    fail(ErrorKind::Parse, path + ": payload size does not match the declared dimensions");
  std::vector<double> values(count);
  for (size_t i = 0; i < count; ++i) values[i] = get_f64_le(p + 16 + i * 8);
  PhaseDataset data(n, ch, TimeGrid::uniform01(t), std::move(values));
  apply_wrap_or_keep(data, opts.wrap_on_load);
  data.require_valid();
  return data;
}

void save_phase_binary(const PhaseDataset& data, const std::string& path) {
  data.require_valid();
  std::string blob;
  blob.reserve(16 + data.values().size() * 8);
  blob += "CFM1";
  put_u32_le(blob, static_cast<uint32_t>(data.subjects()));
  put_u32_le(blob, static_cast<uint32_t>(data.channels()));
  put_u32_le(blob, static_cast<uint32_t>(data.times()));
  for (double v : data.values()) put_f64_le(blob, v);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");
}

namespace {
bool has_suffix(const std::string& s, const char* suffix) {
  const size_t len = std::strlen(suffix);
  return s.size() >= len && s.compare(s.size() - len, len, suffix) == 0;
}
}  // namespace

PhaseDataset load_dataset(const std::string& path, const LoadOptions& opts) {
  return has_suffix(path, ".cfm") ? load_phase_binary(path, opts) : load_phase_csv(path, opts);
}

void save_dataset(const PhaseDataset& data, const std::string& path) {
  if (has_suffix(path, ".cfm"))
    save_phase_binary(data, path);
  else
    save_phase_csv(data, path);
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

std::vector<double> fixed_or_drawn(const std::optional<std::vector<double>>& fixed, size_t big,
                                   const char* what, double nu, double eta, Rng& rng) {
  if (fixed) {
    if (fixed->size() != big)
      fail(ErrorKind::InvalidArgument,
           std::string("fixed ") + what + " needs one entry per basis function");
    for (double v : *fixed)
      if (!(v >= 0.0))
        fail(ErrorKind::InvalidArgument, std::string("fixed ") + what + " must be non-negative");
    return *fixed;
  }
  if (!(nu > 0.0) || !(eta > 0.0))
    fail(ErrorKind::InvalidArgument,
         std::string("inverse-gamma hyperparameters for ") + what + " must be positive");
  std::vector<double> out(big);
  for (double& v : out) v = rng.inv_gamma(nu, eta);
  return out;
}

}  // namespace

std::pair<PhaseDataset, GenerativeTruth> simulate_dataset(size_t subjects, size_t channels,
                                                          const BasisMatrix& basis,
                                                          const Hyperparams& hyper, uint64_t seed,
                                                          const SimulateOverrides& fixed) {
  if (subjects == 0 || channels == 0)
    fail(ErrorKind::InvalidArgument, "need at least one subject and one channel");
  const size_t big = basis.size();
  const size_t t = basis.times();
  Rng rng(seed);

  std::vector<double> beta;
  if (fixed.beta) {
    if (fixed.beta->size() != big)
      fail(ErrorKind::InvalidArgument, "fixed beta needs one entry per basis function");
    beta = *fixed.beta;
  } else {
    if (!(hyper.b0 > 0.0)) fail(ErrorKind::InvalidArgument, "b0 must be positive");
    beta.resize(big);
    const double sd = std::sqrt(hyper.b0);
    for (double& v : beta) v = hyper.a0 + sd * rng.normal();
  }

  const std::vector<double> gamma2 =
      fixed_or_drawn(fixed.gamma2, big, "gamma2", hyper.nu_gamma, hyper.eta_gamma, rng);
  const std::vector<double> tau2 =
      fixed_or_drawn(fixed.tau2, big, "tau2", hyper.nu_tau, hyper.eta_tau, rng);

  double sigma2;
  if (fixed.sigma2) {
    sigma2 = *fixed.sigma2;
    if (!(sigma2 >= 0.0)) fail(ErrorKind::InvalidArgument, "fixed sigma2 must be non-negative");
  } else {
    if (!(hyper.nu_sigma > 0.0) || !(hyper.eta_sigma > 0.0))
      fail(ErrorKind::InvalidArgument, "inverse-gamma hyperparameters for sigma2 must be positive");
    sigma2 = rng.inv_gamma(hyper.nu_sigma, hyper.eta_sigma);
  }

  Mat mu(channels, big);
  for (size_t k = 0; k < channels; ++k)
    for (size_t l = 0; l < big; ++l) mu.at(k, l) = beta[l] + std::sqrt(gamma2[l]) * rng.normal();

  GenerativeTruth truth;
  truth.coeffs = Tensor3<double>(subjects, channels, big);
  truth.sigma2 = sigma2;
  for (size_t s = 0; s < subjects; ++s)
    for (size_t k = 0; k < channels; ++k)
      for (size_t l = 0; l < big; ++l)
        truth.coeffs(s, k, l) = mu.at(k, l) + std::sqrt(tau2[l]) * rng.normal();

  PhaseDataset noisy(subjects, channels, basis.grid);
  truth.clean = PhaseDataset(subjects, channels, basis.grid);
  const double noise_sd = std::sqrt(sigma2);
  for (size_t s = 0; s < subjects; ++s)
    for (size_t k = 0; k < channels; ++k)
      for (size_t j = 0; j < t; ++j) {
        double level = 0.0;
        for (size_t l = 0; l < big; ++l) level += truth.coeffs(s, k, l) * basis.by_function.at(l, j);
        truth.clean.at(s, k, j) = wrap_angle(level);
        noisy.at(s, k, j) = wrap_angle(level + noise_sd * rng.normal());
      }

  return {std::move(noisy), std::move(truth)};
}

}  // namespace cfm
