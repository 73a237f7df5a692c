#pragma once

// The long-range coupling K_ij = kappa |i - j|^{-s}: open-space values, the
// single-site total eps_s, the cell-smeared variant and the periodized
// (torus) kernel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <tuple>

#include <boost/math/special_functions/gamma.hpp>

#include "lrising/errors.hpp"
#include "lrising/lattice.hpp"
#include "lrising/numeric.hpp"

namespace lrising {

struct ModelParams {
  int d = 2;
  double s = 3.0;
  double J = 1.0;
  double kappa = 1.0;
  double h = 0.0;
  double beta = 1.0;

  /// Throws DomainError unless s > d, beta > 0, kappa >= 0, d in {1,2,3}.
  /// Infinite temperature (beta == 0) is admitted only on request.
  void validate(bool allow_zero_beta = false) const {
    check_dimension(d);
    if (!std::isfinite(s) || !(s > d)) {
      throw DomainError("decay exponent must satisfy s > d (got s=" + std::to_string(s) +
                        ", d=" + std::to_string(d) + ")");
    }
    if (std::isnan(beta) || beta < 0.0 || (!allow_zero_beta && beta == 0.0)) {
      throw DomainError("inverse temperature must be positive");
    }
    if (!std::isfinite(kappa) || kappa < 0.0) throw DomainError("kappa must be >= 0");
    if (!std::isfinite(J) || !std::isfinite(h)) throw DomainError("J and h must be finite");
  }

  /// Same parameters with unit long-range amplitude.
  ModelParams unit_amplitude() const {
    ModelParams q = *this;
    q.kappa = 1.0;
    return q;
  }
};

inline void require_summable(int d, double s) {
  check_dimension(d);
  if (!std::isfinite(s) || !(s > d)) {
    throw DomainError("lattice sum diverges unless s > d");
  }
}

/// kappa |i - j|^{-s}, and exactly zero on the diagonal.
inline double coupling(const Site& i, const Site& j, const ModelParams& p) noexcept {
  const long long r2 = squared_distance(p.d, i, j);
  if (r2 == 0) return 0.0;
  return p.kappa * inverse_power_r2(r2, p.s);
}

// ---------------------------------------------------------------------------
// Orbit enumeration. Summands that depend only on the multiset of |delta_k|
// are visited once per orbit of the hyperoctahedral group, weighted by the
// orbit size.

template <class F>
void for_each_orbit(int d, int W, F&& f) {
  static constexpr long long kFactorial[4] = {1, 1, 2, 6};
  auto weight = [d](const Site& a) {
    long long signs = 1;
    for (int k = 0; k < d; ++k) {
      if (a[k] != 0) signs *= 2;
    }
    long long perms = kFactorial[d];
    int run = 1;
    for (int k = 1; k <= d; ++k) {
      if (k < d && a[k] == a[k - 1]) {
        ++run;
      } else {
        perms /= kFactorial[run];
        run = 1;
      }
    }
    return signs * perms;
  };
  Site a{0, 0, 0};
  if (d == 1) {
    for (a[0] = 0; a[0] <= W; ++a[0]) f(a, weight(a));
  } else if (d == 2) {
    for (a[1] = 0; a[1] <= W; ++a[1]) {
      for (a[0] = 0; a[0] <= a[1]; ++a[0]) f(a, weight(a));
    }
  } else {
    for (a[2] = 0; a[2] <= W; ++a[2]) {
      for (a[1] = 0; a[1] <= a[2]; ++a[1]) {
        for (a[0] = 0; a[0] <= a[1]; ++a[0]) f(a, weight(a));
      }
    }
  }
}

inline long long norm2(int d, const Site& a) noexcept {
  long long r2 = 0;
  for (int k = 0; k < d; ++k) r2 += static_cast<long long>(a[k]) * a[k];
  return r2;
}

// ---------------------------------------------------------------------------
// Continuum tail of the lattice sum outside a cube.

/// C_d(s) = integral of |x|^{-s} over the complement of [-1,1]^d, s > d.
/// Pyramid decomposition: 2d/(s-d) * integral_{[-1,1]^{d-1}} (1+|y|^2)^{-s/2} dy.
inline double exterior_cube_constant(int d, double s) {
  require_summable(d, s);
  const double lead = 2.0 * d / (s - d);
  if (d == 1) return lead;
  if (d == 2) return lead * 2.0 * power_profile_integral(s, 1.0);
  static const GaussRule rule = gauss_legendre(48);
  Accumulator acc;
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    const double y = 0.5 * (rule.nodes[a] + 1.0);
    for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
      const double z = 0.5 * (rule.nodes[b] + 1.0);
      acc += 0.25 * rule.weights[a] * rule.weights[b] * std::pow(1.0 + y * y + z * z, -0.5 * s);
    }
  }
  return lead * 4.0 * static_cast<double>(acc.value());
}

namespace detail {

inline double half_diagonal(int d) { return 0.5 * std::sqrt(static_cast<double>(d)); }

/// Smallest admissible window: the shell-count majorant below needs
/// 2m + 1 <= 3(m - sqrt(d)/2).
inline int min_tail_window(int d) {
  return static_cast<int>(std::ceil(1.0 + 3.0 * half_diagonal(d))) + 1;
}

/// Rigorous bound on |sum_{|c|_inf > W} |c|^{-s} - midpoint estimate| where the
/// estimate is integral_ext |x|^{-s} - (1/24) integral_ext Laplacian(|x|^{-s}).
/// Uses |D^k_u |x|^{-s}| <= (s)_k |x|^{-s-k} (Gegenbauer bound).
inline double midpoint_error_bound(int d, double s, int W) {
  const double c = half_diagonal(d);
  const double lap = s * (s + 2.0 - d);
  const double fourth_moment = d / 80.0 + d * (d - 1.0) / 144.0;
  const double b1 = pochhammer(s, 4) / 24.0 * fourth_moment;
  const double b2 = std::abs(lap) * (s + 2.0) * (s + 3.0) * d / (24.0 * 24.0);
  const double shells = 2.0 * d * std::pow(3.0, d - 1) * std::pow(W - c, d - s - 4.0) / (s + 4.0 - d);
  return (b1 + b2) * shells;
}

/// Midpoint-rule estimate of sum_{|c|_inf > W} |c|^{-s}.
inline double exterior_tail_estimate(int d, double s, int W) {
  const double wp = W + 0.5;
  const double lap = s * (s + 2.0 - d);
  return exterior_cube_constant(d, s) * std::pow(wp, d - s) -
         lap / 24.0 * exterior_cube_constant(d, s + 2.0) * std::pow(wp, d - s - 2.0);
}

inline int max_tail_window(int d) {
  switch (d) {
    case 1: return 50'000'000;
    case 2: return 40'000;
    default: return 2'000;
  }
}

/// Unit-amplitude eps_s with window W: partial sum + estimated tail, +-err.
inline TailBound unit_single_site_sum_at(int d, double s, int W) {
  Accumulator acc;
  for_each_orbit(d, W, [&](const Site& a, long long mult) {
    const long long r2 = norm2(d, a);
    if (r2 == 0) return;
    acc += static_cast<long double>(mult) * inverse_power_r2(r2, s);
  });
  const double partial = static_cast<double>(acc.value());
  const double estimate = partial + exterior_tail_estimate(d, s, W);
  const double err = midpoint_error_bound(d, s, W) + 1e-15 * estimate;
  return TailBound::from_estimate(estimate, err);
}

inline int window_for_tolerance(int d, double s, double tol) {
  int W = min_tail_window(d);
  const int cap = max_tail_window(d);
  while (W < cap && 2.0 * midpoint_error_bound(d, s, W) > tol) {
    W = std::min(cap, W + std::max(1, W / 4));
  }
  return W;
}

}  // namespace detail

/// Unit-amplitude single-site total eps_s = sum_{j != 0} |j|^{-s}, memoized
/// per (d, s, tol) since box sums request it repeatedly.
inline TailBound unit_single_site_sum(int d, double s, double tol) {
  require_summable(d, s);
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  static std::mutex mu;
  static std::map<std::tuple<int, double, double>, TailBound> memo;
  const auto key = std::make_tuple(d, s, tol);
  {
    std::lock_guard lock(mu);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  const int W = detail::window_for_tolerance(d, s, tol);
  const TailBound r = detail::unit_single_site_sum_at(d, s, W);
  if (r.tail > tol) {
    throw ToleranceNotMet("single_site_sum: tolerance not reachable within window cap", r.value,
                          r.tail);
  }
  std::lock_guard lock(mu);
  memo.emplace(key, r);
  return r;
}

/// eps_s = sum_j K_{0j}, direct summation over |j|_inf <= R plus a midpoint
/// tail estimate whose error is bounded rigorously; R is chosen from tol.
inline TailBound single_site_sum(const ModelParams& p, double tol) {
  require_summable(p.d, p.s);
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (p.kappa == 0.0) return {0.0, 0.0};
  return p.kappa * unit_single_site_sum(p.d, p.s, tol / p.kappa);
}

// ---------------------------------------------------------------------------
// Periodized kernel.

enum class ImagePolicy {
  full,           ///< sum over all periodic images (default)
  minimum_image,  ///< nearest image only; approximate, for speed comparisons
};

/// Minimum-image representative of each component in [-N/2, N/2].
inline Site minimum_image(int d, Site r, int N) noexcept {
  for (int k = 0; k < d; ++k) {
    r[k] %= N;
    if (r[k] < 0) r[k] += N;
    if (2 * r[k] > N) r[k] -= N;
  }
  return r;
}

namespace detail {

/// Generalized Ewald split of sum_{n} |r + N n|^{-s} (self term dropped when
/// r = 0) using |x|^{-s} = Gamma(s/2)^{-1} int_0^inf t^{s/2-1} e^{-t|x|^2} dt.
/// Both halves converge like Gaussians; truncation tails are bounded by
/// shell majorants of monotone term envelopes.
inline TailBound ewald_periodic_sum(int d, double s, int N, const Site& r_in, double tol) {
  const Site r = minimum_image(d, r_in, N);
  const double eta = std::sqrt(std::numbers::pi) / N;
  const double eta2 = eta * eta;
  const double a = 0.5 * s;
  const double b = 0.5 * (s - d);
  const double gamma_a = std::tgamma(a);
  const double pref = std::pow(std::numbers::pi, 0.5 * d) / (std::pow(static_cast<double>(N), d) * gamma_a);
  const bool self = norm2(d, r) == 0;

  auto shell_count = [d](int m) { return 2.0 * d * std::pow(2.0 * m + 1.0, d - 1); };
  auto real_envelope = [&](double rho) {
    return boost::math::gamma_q(a, eta2 * rho * rho) * std::pow(rho, -s);
  };
  auto recip_envelope = [&](double k) {
    const double k2 = k * k;
    return pref * std::pow(0.25 * k2, b) * upper_gamma(-b, 0.25 * k2 / eta2);
  };
  auto tail_from = [&](int M, auto&& envelope, double scale) {
    double t = 0.0;
    for (int m = M + 1; m < M + 200; ++m) {
      const double term = shell_count(m) * envelope(scale * m);
      t += term;
      if (term < 1e-300 || term < 1e-18 * t) break;
    }
    return t;
  };

  int M = 2;
  double tail_real = 0.0;
  double tail_recip = 0.0;
  for (;; ++M) {
    tail_real = tail_from(M, [&](double x) { return real_envelope(N * (x - 0.5)); }, 1.0);
    tail_recip = tail_from(M, recip_envelope, 2.0 * std::numbers::pi / N);
    if (tail_real + tail_recip <= 0.25 * tol || M > 60) break;
  }

  Accumulator acc;
  double magnitude = 0.0;
  const Grid cube(d, 2 * M + 1);
  for (std::size_t idx = 0; idx < cube.size(); ++idx) {
    Site n = cube.coords(idx);
    for (int k = 0; k < d; ++k) n[k] -= M;
    long long x2 = 0;
    for (int k = 0; k < d; ++k) {
      const long long xk = r[k] + static_cast<long long>(N) * n[k];
      x2 += xk * xk;
    }
    if (x2 > 0) {
      const double rho = std::sqrt(static_cast<double>(x2));
      const double t = boost::math::gamma_q(a, eta2 * x2) * std::pow(rho, -s);
      acc += t;
      magnitude += std::abs(t);
    }
    // Reciprocal lattice k = 2 pi n / N.
    long long n2 = norm2(d, n);
    if (n2 == 0) {
      const double t = pref * 2.0 * std::pow(eta, s - d) / (s - d);
      acc += t;
      magnitude += std::abs(t);
    } else {
      const double k2 = 4.0 * std::numbers::pi * std::numbers::pi * n2 / (static_cast<double>(N) * N);
      double phase = 0.0;
      for (int k = 0; k < d; ++k) phase += 2.0 * std::numbers::pi * n[k] * r[k] / N;
      const double t =
          pref * std::cos(phase) * std::pow(0.25 * k2, b) * upper_gamma(-b, 0.25 * k2 / eta2);
      acc += t;
      magnitude += std::abs(t);
    }
  }
  if (self) {
    const double t = 2.0 * std::pow(eta, s) / (s * gamma_a);
    acc += -t;
    magnitude += t;
  }
  const double estimate = static_cast<double>(acc.value());
  const double err = tail_real + tail_recip + 1e-13 * magnitude;
  return TailBound::from_estimate(estimate, err);
}

}  // namespace detail

/// Periodized coupling between sites i and j on a torus of side N:
/// sum_{n in Z^d} kappa |i - j + N n|^{-s}, with the n = 0 term dropped when
/// i == j. Under ImagePolicy::minimum_image only the nearest image is kept
/// (approximate; the diagonal is then 0).
inline TailBound torus_coupling(const Site& i, const Site& j, int N, const ModelParams& p, double tol,
                                ImagePolicy policy = ImagePolicy::full) {
  require_summable(p.d, p.s);
  if (N < 3) throw DomainError("torus side must be at least 3");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  const Site r = minimum_image(p.d, i - j, N);
  if (policy == ImagePolicy::minimum_image) {
    const long long r2 = norm2(p.d, r);
    return {r2 == 0 ? 0.0 : p.kappa * inverse_power_r2(r2, p.s), 0.0};
  }
  if (p.kappa == 0.0) return {0.0, 0.0};
  return p.kappa * detail::ewald_periodic_sum(p.d, p.s, N, r, tol / p.kappa);
}

// ---------------------------------------------------------------------------
// Cell-smeared coupling.

/// kappa * integral over the unit cells around i and j of |x - y|^{-s}.
/// The 2d-dimensional integral is folded to the d-dimensional tent-weighted
/// integral over u = (y - x) - (j - i) in [-1,1]^d, then evaluated with a
/// tensor-product Gauss-Legendre rule of quad_order nodes on each half-axis.
inline double smeared_coupling(const Site& i, const Site& j, const ModelParams& p, int quad_order) {
  require_summable(p.d, p.s);
  if (quad_order < 1) throw DomainError("quadrature order must be positive");
  const long long r2 = squared_distance(p.d, i, j);
  if (static_cast<double>(r2) <= static_cast<double>(p.d)) {
    throw DomainError("smeared_coupling: unit cells touch or overlap (need |i-j| > sqrt(d))");
  }
  const GaussRule rule = gauss_legendre(quad_order);
  // Nodes on [-1,0] and [0,1] with the tent weight 1 - |u| folded in.
  std::vector<double> u;
  std::vector<double> w;
  for (int half = 0; half < 2; ++half) {
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double x = 0.5 * rule.nodes[q] + (half == 0 ? -0.5 : 0.5);
      u.push_back(x);
      w.push_back(0.5 * rule.weights[q] * (1.0 - std::abs(x)));
    }
  }
  Site delta = j - i;
  const std::size_t m = u.size();
  Accumulator acc;
  const Grid nodes(p.d, static_cast<int>(m));
  for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
    const Site q = nodes.coords(idx);
    double weight = 1.0;
    double dist2 = 0.0;
    for (int k = 0; k < p.d; ++k) {
      weight *= w[q[k]];
      const double x = delta[k] + u[q[k]];
      dist2 += x * x;
    }
    acc += weight * std::pow(dist2, -0.5 * p.s);
  }
  return p.kappa * static_cast<double>(acc.value());
}

/// Constant C(ell, a) with |K_ij - K_{i0 j0}| <= C (ell/a) K_{i0 j0} for all
/// i, i0 in one translate of Lambda_ell and j, j0 in another at distance >= a.
/// Mean-value bound with |r - r0| <= 4 sqrt(d) ell; requires a > 4 sqrt(d) ell.
inline double block_averaging_constant(int d, double s, int ell, double a) {
  const double spread = 4.0 * std::sqrt(static_cast<double>(d)) * ell;
  if (!(a > spread)) throw DomainError("block averaging bound needs a > 4 sqrt(d) ell");
  return 4.0 * std::sqrt(static_cast<double>(d)) * s * std::pow(1.0 - spread / a, -(s + 1.0));
}

}  // namespace lrising
