#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spread/error.hpp"

namespace spread {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw UndefinedStatisticError("mean of empty sample");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw UndefinedStatisticError("variance needs >= 2 samples");
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

inline double stddev(std::span<const double> xs) { return std::sqrt(variance(xs)); }

// Standard error of the mean.
inline double std_error(std::span<const double> xs) {
  return stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw UndefinedStatisticError("median of empty sample");
  const std::size_t mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + mid, xs.end());
  double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  std::nth_element(xs.begin(), xs.begin() + mid - 1, xs.end());
  return 0.5 * (hi + xs[mid - 1]);
}

inline double sample_correlation(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgumentError("correlation: size mismatch");
  if (xs.size() < 2) throw UndefinedStatisticError("correlation needs >= 2 samples");
  const double mx = mean(xs), my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;  // degenerate margins carry no signal
  return sxy / std::sqrt(sxx * syy);
}

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959964) {
  if (trials == 0) throw UndefinedStatisticError("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Two-sided 97.5% Student t quantile; exact table for small df, normal tail after.
inline double t_quantile_975(std::size_t df) {
  static constexpr double table[] = {
      12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060,
      2.2622,  2.2281, 2.2010, 2.1788, 2.1604, 2.1448, 2.1314, 2.1199,
      2.1098,  2.1009, 2.0930, 2.0860, 2.0796, 2.0739, 2.0687, 2.0639,
      2.0595,  2.0555, 2.0518, 2.0484, 2.0452, 2.0423};
  if (df == 0) throw InvalidArgumentError("t quantile: df must be >= 1");
  if (df <= 30) return table[df - 1];
  return 1.959964;
}

// Normal-approximation CI for the mean of a sample.
inline Interval mean_ci(std::span<const double> xs, double z = 1.959964) {
  const double m = mean(xs);
  if (xs.size() < 2) return {m, m};
  const double se = std_error(xs);
  return {m - z * se, m + z * se};
}

}  // namespace spread
