#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfm {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

enum class ErrorKind {
  InvalidArgument,
  Validation,
  Parse,
  Io,
  Numeric,
  Internal,
};

// Exceptions thrown by the core. The C boundary maps ErrorKind onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

// Reduce an angle to [0, 2*pi). Exact multiples of 2*pi map to 0.
inline double wrap_angle(double x) {
  double v = std::fmod(x, kTwoPi);
  if (v < 0.0) v += kTwoPi;
  if (v >= kTwoPi) v -= kTwoPi;  // fmod rounding can land exactly on 2*pi
  return v;
}

// Signed angular difference reduced to (-pi, pi].
inline double wrap_to_pi(double x) {
  double v = wrap_angle(x);
  return v > 3.14159265358979323846 ? v - kTwoPi : v;
}

// Dense 3-d array with [i0][i1][i2] layout, innermost index contiguous.
template <typename T>
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(size_t d0, size_t d1, size_t d2, T fill = T{})
      : d0_(d0), d1_(d1), d2_(d2), v_(d0 * d1 * d2, fill) {}

  T& operator()(size_t i, size_t j, size_t k) { return v_[(i * d1_ + j) * d2_ + k]; }
  T operator()(size_t i, size_t j, size_t k) const { return v_[(i * d1_ + j) * d2_ + k]; }

  size_t dim0() const { return d0_; }
  size_t dim1() const { return d1_; }
  size_t dim2() const { return d2_; }
  size_t size() const { return v_.size(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }

  bool operator==(const Tensor3&) const = default;

 private:
  size_t d0_ = 0, d1_ = 0, d2_ = 0;
  std::vector<T> v_;
};

inline size_t unordered_pair_count(size_t p) { return p * (p - 1) / 2; }

}  // namespace cfm
