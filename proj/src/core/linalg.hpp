#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cfm {

// Minimal row-major dense matrix. The model works with small matrices
// (basis dimension is capped at 30), so there is no point pulling in a
// full linear algebra package.
struct Mat {
  size_t rows = 0, cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& at(size_t i, size_t j) { return v[i * cols + j]; }
  double at(size_t i, size_t j) const { return v[i * cols + j]; }

  bool operator==(const Mat&) const = default;
};

// Cholesky factorization A = L L^T of a symmetric positive definite matrix.
// factor() returns nullopt when a pivot is not strictly positive (or not
// finite), which callers surface as a factorization error.
class Cholesky {
 public:
  static std::optional<Cholesky> factor(const Mat& a);

  size_t dim() const { return n_; }

  // Solve A x = b in place.
  void solve(std::span<double> x) const;

  // Solve L y = b in place (forward substitution).
  void solve_lower(std::span<double> x) const;

  // Solve L^T x = y in place (back substitution). Applying this to an
  // iid standard normal vector yields a draw with covariance A^{-1}.
  void solve_upper_transpose(std::span<double> x) const;

 private:
  size_t n_ = 0;
  std::vector<double> l_;  // full n x n storage, lower triangle used
};

}  // namespace cfm
