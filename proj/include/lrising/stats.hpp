#pragma once

// Error bars for correlated Monte Carlo series.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "lrising/errors.hpp"

namespace lrising {

struct Estimate {
  double mean = 0.0;
  double error = 0.0;
};

inline constexpr int kMinJackknifeBins = 16;

/// Mean with a delete-one-bin jackknife error over `bins` contiguous bins
/// (the tail that does not fill a bin is dropped from the error analysis).
template <class F>
Estimate jackknife(const std::vector<double>& series, int bins, F&& statistic) {
  if (bins < kMinJackknifeBins) throw DomainError("jackknife needs at least 16 bins");
  if (series.size() < static_cast<std::size_t>(bins)) throw DomainError("series shorter than bin count");
  const std::size_t width = series.size() / bins;
  std::vector<double> bin_sums(bins, 0.0);
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    for (std::size_t k = 0; k < width; ++k) bin_sums[b] += series[b * width + k];
    total += bin_sums[b];
  }
  const double n = static_cast<double>(width) * bins;
  const double full = statistic(total / n);
  std::vector<double> leave(bins);
  double leave_mean = 0.0;
  for (int b = 0; b < bins; ++b) {
    leave[b] = statistic((total - bin_sums[b]) / (n - width));
    leave_mean += leave[b];
  }
  leave_mean /= bins;
  double var = 0.0;
  for (double v : leave) var += (v - leave_mean) * (v - leave_mean);
  var *= (bins - 1.0) / bins;
  return {full, std::sqrt(var)};
}

inline Estimate jackknife(const std::vector<double>& series, int bins = kMinJackknifeBins) {
  return jackknife(series, bins, [](double m) { return m; });
}

/// First-half vs second-half comparison: true when the half means differ
/// by more than `sigmas` combined standard errors.
inline bool halves_disagree(const std::vector<double>& series, double sigmas = 3.0) {
  const std::size_t half = series.size() / 2;
  if (half < static_cast<std::size_t>(kMinJackknifeBins)) return false;
  const std::vector<double> a(series.begin(), series.begin() + half);
  const std::vector<double> b(series.begin() + half, series.begin() + 2 * half);
  const Estimate ea = jackknife(a);
  const Estimate eb = jackknife(b);
  const double se = std::hypot(ea.error, eb.error);
  const double diff = std::abs(ea.mean - eb.mean);
  if (se == 0.0) return diff > 0.0;
  return diff > sigmas * se;
}

}  // namespace lrising
