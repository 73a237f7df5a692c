#pragma once

// Independent reference computations used only by tests and the verify
// suites. They share no summation strategy with the production paths:
// eps_s comes from the Ewald route (torus of side 1) and interior sums are
// explicit double loops.

#include <cmath>
#include <vector>

#include "lrising/kernel.hpp"
#include "lrising/lattice.hpp"
#include "lrising/numeric.hpp"

namespace lrising::oracle {

/// eps_s = sum_{n != 0} |n|^{-s} as the periodic sum on a torus of side 1.
inline TailBound epsilon_ewald(int d, double s, double tol = 1e-13) {
  require_summable(d, s);
  return detail::ewald_periodic_sum(d, s, 1, Site{0, 0, 0}, tol);
}

/// Unit-amplitude T_{L,a} by |Lambda_{L-a}| eps_s minus an explicit
/// O(|Lambda_{L-a}| |Lambda_L|) double loop.
inline TailBound brute_t_sum(int d, int L, int a, double s) {
  const TailBound eps = epsilon_ewald(d, s);
  const Region outer = box_region(d, L);
  const Region inner = box_region(d, L - a);
  // Kernel by squared distance; |delta|^2 <= d (2L)^2.
  std::vector<double> table(static_cast<std::size_t>(d) * 4 * L * L + 1, 0.0);
  for (std::size_t r2 = 1; r2 < table.size(); ++r2) table[r2] = std::pow(static_cast<double>(r2), -0.5 * s);
  long double interior = 0.0L;
  for (const auto& i : inner.sites) {
    double row = 0.0;
    for (const auto& j : outer.sites) row += table[squared_distance(d, i, j)];
    interior += row;
  }
  const double v = static_cast<double>(inner.size());
  const double value = static_cast<double>(static_cast<long double>(v) * eps.value - interior);
  const double rounding = 1e-14 * v * eps.upper();
  return {value - rounding, v * eps.tail + 2.0 * rounding};
}

/// Q for d = 1 from the antiderivative of [(1-x)^{1-s} + (1+x)^{1-s}]/(s-1).
inline double q_integral_1d(double s) {
  return 2.0 * std::pow(2.0, 2.0 - s) / ((s - 1.0) * (2.0 - s));
}

/// Corner kernel int_0^inf int_0^inf [(X+x)^2 + (Y+y)^2]^{-3/2} dx dy.
inline double corner_s3(double X, double Y) {
  return (X + Y - std::hypot(X, Y)) / (X * Y);
}

}  // namespace lrising::oracle
