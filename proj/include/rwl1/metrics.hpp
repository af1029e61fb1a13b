#pragma once

#include <cmath>
#include <limits>
#include <span>

#include "rwl1/linalg.hpp"

namespace rwl1 {

inline constexpr double kSerCapDb = 300.0;

/// 20 log10(||x_true|| / ||x_true - x_hat||), capped at 300 dB.
inline double ser_db(const Vector& x_true, const Vector& x_hat) {
  require(x_true.size() == x_hat.size(), "ser_db: length mismatch");
  const double signal = x_true.norm();
  require(signal > 0.0, "ser_db: reference signal is all zero");
  const double err = (x_true - x_hat).norm();
  if (err == 0.0) return kSerCapDb;
  return std::min(kSerCapDb, 20.0 * std::log10(signal / err));
}

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) deviation, 0 for one value, NaN for none
  std::size_t count = 0;
};

/// Welford's update; stable for long ensembles.
inline MeanStd mean_stddev(std::span<const double> values) {
  MeanStd out;
  double m2 = 0.0;
  for (double v : values) {
    ++out.count;
    const double delta = v - out.mean;
    out.mean += delta / static_cast<double>(out.count);
    m2 += delta * (v - out.mean);
  }
  if (out.count == 0) out.mean = out.stddev = std::numeric_limits<double>::quiet_NaN();
  if (out.count > 1) out.stddev = std::sqrt(m2 / static_cast<double>(out.count - 1));
  return out;
}

}  // namespace rwl1
