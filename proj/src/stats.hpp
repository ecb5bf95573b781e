#ifndef MSSFS_STATS_HPP
#define MSSFS_STATS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mssfs {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Smallest probability admitted before taking logs; guards arithmetic
// underflow only (finite logistic inputs cannot produce exact zeros).
inline constexpr double kProbFloor = 1e-300;

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

// Standard normal CDF.
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.70710678118654752440084436210485);
}

// Standard normal quantile: Acklam's rational approximation refined by one
// Halley step against erfc, accurate to ~1e-15 over (0, 1).
double norm_ppf(double p);

}  // namespace mssfs

#endif  // MSSFS_STATS_HPP
