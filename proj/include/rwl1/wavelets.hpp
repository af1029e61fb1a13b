#pragma once

#include <array>
#include <cmath>
#include <string>

#include "rwl1/linalg.hpp"

namespace rwl1 {

inline bool is_power_of_two(Index n) { return n > 0 && (n & (n - 1)) == 0; }

namespace detail {

/// Two-channel orthonormal filter bank with periodic wrap. `h` is the lowpass
/// filter; the highpass is its quadrature mirror g_j = (-1)^j h_{K-1-j}.
template <std::size_t K>
struct FilterBank {
  std::array<double, K> h;
  std::array<double, K> g;

  explicit constexpr FilterBank(const std::array<double, K>& lowpass) : h(lowpass), g{} {
    for (std::size_t j = 0; j < K; ++j) g[j] = (j % 2 == 0 ? 1.0 : -1.0) * h[K - 1 - j];
  }

  // One analysis level on x[0, len): approximations to the front half, details behind.
  void analyze(Vector& x, Index len, Vector& scratch) const {
    const Index half = len / 2;
    for (Index k = 0; k < half; ++k) {
      double a = 0.0;
      double d = 0.0;
      for (std::size_t j = 0; j < K; ++j) {
        const double v = x((2 * k + static_cast<Index>(j)) % len);
        a += h[j] * v;
        d += g[j] * v;
      }
      scratch(k) = a;
      scratch(half + k) = d;
    }
    x.head(len) = scratch.head(len);
  }

  void synthesize(Vector& x, Index len, Vector& scratch) const {
    const Index half = len / 2;
    scratch.head(len).setZero();
    for (Index k = 0; k < half; ++k) {
      const double a = x(k);
      const double d = x(half + k);
      for (std::size_t j = 0; j < K; ++j)
        scratch((2 * k + static_cast<Index>(j)) % len) += h[j] * a + g[j] * d;
    }
    x.head(len) = scratch.head(len);
  }

  Vector forward(const Vector& signal, const char* name) const {
    require(is_power_of_two(signal.size()),
            std::string(name) + ": length " + std::to_string(signal.size()) + " is not a power of two");
    Vector x = signal;
    Vector scratch(x.size());
    for (Index len = x.size(); len >= 2; len /= 2) analyze(x, len, scratch);
    return x;
  }

  Vector inverse(const Vector& coeffs, const char* name) const {
    require(is_power_of_two(coeffs.size()),
            std::string(name) + ": length " + std::to_string(coeffs.size()) + " is not a power of two");
    Vector x = coeffs;
    Vector scratch(x.size());
    for (Index len = 2; len <= x.size(); len *= 2) synthesize(x, len, scratch);
    return x;
  }
};

inline const FilterBank<2>& haar_bank() {
  static const FilterBank<2> bank({M_SQRT1_2, M_SQRT1_2});
  return bank;
}

inline const FilterBank<4>& daub4_bank() {
  static const FilterBank<4> bank = [] {
    const double s3 = std::sqrt(3.0);
    const double c = 4.0 * std::sqrt(2.0);
    return FilterBank<4>({(1.0 + s3) / c, (3.0 + s3) / c, (3.0 - s3) / c, (1.0 - s3) / c});
  }();
  return bank;
}

}  // namespace detail

// Full-depth orthonormal transforms with periodic boundaries. Coefficient
// layout: [scaling, coarsest detail, ..., finest detail (N/2 entries)].

inline Vector haar_forward(const Vector& x) { return detail::haar_bank().forward(x, "haar_forward"); }
inline Vector haar_inverse(const Vector& c) { return detail::haar_bank().inverse(c, "haar_inverse"); }
inline Vector daub4_forward(const Vector& x) { return detail::daub4_bank().forward(x, "daub4_forward"); }
inline Vector daub4_inverse(const Vector& c) { return detail::daub4_bank().inverse(c, "daub4_inverse"); }

}  // namespace rwl1
