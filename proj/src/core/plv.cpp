#include "core/plv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace cfm {

Mat subject_plv(const double* phases, size_t channels, size_t times) {
  // unit phasors once per sample, pair sums from products
  std::vector<double> cs(channels * times), sn(channels * times);
  for (size_t i = 0; i < channels * times; ++i) {
    cs[i] = std::cos(phases[i]);
    sn[i] = std::sin(phases[i]);
  }
  Mat out(channels, channels);
  for (size_t k = 0; k < channels; ++k) out.at(k, k) = 1.0;
  const double inv_t = 1.0 / static_cast<double>(times);
  for (size_t k = 0; k < channels; ++k)
    for (size_t q = k + 1; q < channels; ++q) {
      double re = 0.0, im = 0.0;
      const double *ck = &cs[k * times], *sk = &sn[k * times];
      const double *cq = &cs[q * times], *sq = &sn[q * times];
      for (size_t j = 0; j < times; ++j) {
        // e^{i(theta_k - theta_q)} = (ck + i sk)(cq - i sq)
        re += ck[j] * cq[j] + sk[j] * sq[j];
        im += sk[j] * cq[j] - ck[j] * sq[j];
      }
      const double v = std::sqrt(re * re + im * im) * inv_t;
      out.at(k, q) = v;
      out.at(q, k) = v;
    }
  return out;
}

PlvEstimate naive_plv(const PhaseDataset& data) {
  data.require_valid();
  const size_t n = data.subjects(), p = data.channels(), t = data.times();
  PlvEstimate est;
  est.per_subject.reserve(n);
  est.averaged = Mat(p, p);
  for (size_t s = 0; s < n; ++s) {
    est.per_subject.push_back(subject_plv(&data.values()[s * p * t], p, t));
    for (size_t i = 0; i < p * p; ++i) est.averaged.v[i] += est.per_subject.back().v[i];
  }
  for (double& v : est.averaged.v) v /= static_cast<double>(n);
  return est;
}

std::vector<Mat> posterior_plv(const PosteriorChain& chain, const BasisMatrix& basis,
                               bool include_wrap_terms) {
  if (chain.draws == 0) fail(ErrorKind::InvalidArgument, "chain holds no draws");
  if (basis.size() != chain.basis_size || basis.times() != chain.times ||
      basis.grid != chain.grid)
    fail(ErrorKind::Validation, "basis does not match the chain dimensions");

  const size_t n = chain.subjects, p = chain.channels, t = chain.times, big = chain.basis_size;
  std::vector<Mat> out;
  out.reserve(chain.draws);

  std::vector<double> theta(p * t);
  for (size_t d = 0; d < chain.draws; ++d) {
    Mat avg(p, p);
    for (size_t s = 0; s < n; ++s) {
      for (size_t k = 0; k < p; ++k) {
        double* row = &theta[k * t];
        std::fill(row, row + t, 0.0);
        for (size_t l = 0; l < big; ++l) {
          const double a = chain.coeff(d, s, k, l);
          const double* b = &basis.by_function.v[l * t];
          for (size_t j = 0; j < t; ++j) row[j] += a * b[j];
        }
        if (include_wrap_terms)
          for (size_t j = 0; j < t; ++j)
            row[j] -= kTwoPi * static_cast<double>(chain.wrap(d, s, k, j));
      }
      const Mat m = subject_plv(theta.data(), p, t);
      for (size_t i = 0; i < p * p; ++i) avg.v[i] += m.v[i];
    }
    for (double& v : avg.v) v /= static_cast<double>(n);
    out.push_back(std::move(avg));
  }
  return out;
}

double quantile_sorted(std::span<const double> sorted, double alpha) {
  if (sorted.empty()) fail(ErrorKind::InvalidArgument, "quantile of an empty sample");
  if (alpha <= 0.0) return sorted.front();
  if (alpha >= 1.0) return sorted.back();
  const double h = alpha * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

PlvSummary summarize_plv(const std::vector<Mat>& draws, double threshold, double decision_cut) {
  if (draws.empty()) fail(ErrorKind::InvalidArgument, "no PLV draws to summarize");
  const size_t p = draws.front().rows;
  for (const Mat& m : draws)
    if (m.rows != p || m.cols != p)
      fail(ErrorKind::Validation, "PLV draws have inconsistent dimensions");

  PlvSummary summary;
  summary.threshold = threshold;
  summary.decision_cut = decision_cut;
  summary.draws = draws.size();
  summary.pairs.reserve(unordered_pair_count(p));

  std::vector<double> vals(draws.size());
  for (size_t k = 0; k < p; ++k)
    for (size_t q = k + 1; q < p; ++q) {
      double mean = 0.0;
      size_t above = 0;
      for (size_t d = 0; d < draws.size(); ++d) {
        const double v = draws[d].at(k, q);
        vals[d] = v;
        mean += v;
        if (v >= threshold) ++above;
      }
      mean /= static_cast<double>(draws.size());
      std::sort(vals.begin(), vals.end());
      PairSummary pair;
      pair.k = k;
      pair.kprime = q;
      pair.mean = mean;
      pair.ci_low = quantile_sorted(vals, 0.025);
      pair.ci_high = quantile_sorted(vals, 0.975);
      pair.exceedance = static_cast<double>(above) / static_cast<double>(draws.size());
      pair.edge = pair.exceedance >= decision_cut;
      summary.pairs.push_back(pair);
    }
  return summary;
}

void write_edges_csv(const PlvSummary& summary, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out << "k,kprime,plv_mean,ci_low,ci_high,p_exceed,edge\n";
  char buf[160];
  for (const PairSummary& pair : summary.pairs) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g,%.10g,%.10g,%.10g,%d\n", pair.k, pair.kprime,
                  pair.mean, pair.ci_low, pair.ci_high, pair.exceedance, pair.edge ? 1 : 0);
    out << buf;
  }
  if (!out) fail(ErrorKind::Io, "short write to '" + path + "'");
}

}  // namespace cfm
