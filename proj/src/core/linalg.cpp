#include "core/linalg.hpp"

#include <cmath>

namespace cfm {

std::optional<Cholesky> Cholesky::factor(const Mat& a) {
  if (a.rows != a.cols || a.rows == 0) return std::nullopt;
  const size_t n = a.rows;
  Cholesky out;
  out.n_ = n;
  out.l_.assign(n * n, 0.0);
  auto l = [&out, n](size_t i, size_t j) -> double& { return out.l_[i * n + j]; };

  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double sum = a.at(i, j);
      for (size_t k = 0; k < j; ++k) sum -= l(i, k) * l(j, k);
      if (i == j) {
        if (!(sum > 0.0) || !std::isfinite(sum)) return std::nullopt;
        l(i, j) = std::sqrt(sum);
      } else {
        l(i, j) = sum / l(j, j);
      }
    }
  }
  return out;
}

void Cholesky::solve(std::span<double> x) const {
  solve_lower(x);
  solve_upper_transpose(x);
}

void Cholesky::solve_lower(std::span<double> x) const {
  for (size_t i = 0; i < n_; ++i) {
    double sum = x[i];
    for (size_t k = 0; k < i; ++k) sum -= l_[i * n_ + k] * x[k];
    x[i] = sum / l_[i * n_ + i];
  }
}

void Cholesky::solve_upper_transpose(std::span<double> x) const {
  for (size_t ii = n_; ii-- > 0;) {
    double sum = x[ii];
    for (size_t k = ii + 1; k < n_; ++k) sum -= l_[k * n_ + ii] * x[k];
    x[ii] = sum / l_[ii * n_ + ii];
  }
}

}  // namespace cfm
