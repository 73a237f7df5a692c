#pragma once

// Deterministic interaction sums between a finite set and its complement
// (T_L, T_{L,a}, general regions), the continuum integrals Q, I_1, I_2 and
// least-squares fits of their large-L asymptotics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lrising/errors.hpp"
#include "lrising/fft.hpp"
#include "lrising/kernel.hpp"
#include "lrising/lattice.hpp"
#include "lrising/numeric.hpp"

namespace lrising {

/// Box Lambda_L = [-L, L]^d with an optional cutoff a: the inner index of
/// T_{L,a} then runs over Lambda_{L-a} only.
struct BoxSpec {
  int d = 1;
  int L = 0;
  std::optional<int> a;

  void validate() const {
    check_dimension(d);
    if (L < 0) throw DomainError("box half-side L must be >= 0");
    if (a && (*a < 0 || *a >= std::max(L, 1) || (L == 0 && *a != 0))) {
      throw DomainError("cutoff must satisfy 0 <= a < L");
    }
  }
  int cutoff() const noexcept { return a.value_or(0); }
  long long volume() const noexcept { return box_volume(d, L); }
  long long inner_volume() const noexcept { return box_volume(d, L - cutoff()); }
  long long boundary_bonds() const noexcept { return box_boundary_bonds(d, L); }
};

namespace detail {

/// Smallest unit-amplitude eps_s tolerance we ask for per dimension; below
/// this the direct window gets expensive (d = 3) for no practical gain.
inline double epsilon_tolerance_floor(int d) {
  switch (d) {
    case 1: return 1e-13;
    case 2: return 1e-12;
    default: return 1e-10;
  }
}

inline TailBound unit_epsilon_for(int d, double s, double tol, double multiplicity) {
  const double want = tol / std::max(1.0, multiplicity);
  return unit_single_site_sum(d, s, std::max(want, epsilon_tolerance_floor(d)));
}

/// Size of {i in [-m, m] : i + delta in [-L, L]} for m <= L.
inline long long overlap_1d(int m, int L, int delta) noexcept {
  const long long lo = std::max<long long>(-m, -static_cast<long long>(L) - delta);
  const long long hi = std::min<long long>(m, static_cast<long long>(L) - delta);
  return hi >= lo ? hi - lo + 1 : 0;
}

inline TailBound finish_crossing(long double body, long double s_window, double volume,
                                 const TailBound& eps, double kappa, double tol, const char* who) {
  // sum_{delta != 0} K(delta) (V - c(delta)) over the window, plus V times
  // the part of eps_s outside the window.
  const long double outside = static_cast<long double>(eps.value) - s_window;
  const long double total = body + static_cast<long double>(volume) * outside;
  const double rounding = 1e-15 * volume * eps.upper();
  TailBound r{kappa * static_cast<double>(total) - kappa * rounding,
              kappa * (volume * eps.tail + 2.0 * rounding)};
  if (r.tail > tol) {
    throw ToleranceNotMet(std::string(who) + ": tolerance below what eps_s supports", r.value, r.tail);
  }
  return r;
}

}  // namespace detail

/// T_{L,a} = sum_{i in Lambda_{L-a}, j notin Lambda_L} K_ij by the complement
/// identity |Lambda_{L-a}| eps_s - sum_{i in Lambda_{L-a}, j in Lambda_L} K_ij.
/// The interior part is a sum over displacements weighted by their exact
/// count c(delta), which for boxes is a product of 1D overlaps; the sum runs
/// over hyperoctahedral orbits and never forms the cancelling difference.
inline TailBound t_sum_cutoff(const BoxSpec& box, const ModelParams& p, double tol) {
  box.validate();
  if (box.d != p.d) throw DomainError("box and model dimensions differ");
  require_summable(p.d, p.s);
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (p.kappa == 0.0) return {0.0, 0.0};
  const int d = p.d;
  const int L = box.L;
  const int m = L - box.cutoff();
  const double v_in = static_cast<double>(box.inner_volume());
  const TailBound eps = detail::unit_epsilon_for(d, p.s, tol / p.kappa, v_in);
  const int E = L + m;
  Accumulator body;
  Accumulator window;
  for_each_orbit(d, E, [&](const Site& delta, long long mult) {
    const long long r2 = norm2(d, delta);
    if (r2 == 0) return;
    long long c = 1;
    for (int k = 0; k < d; ++k) c *= detail::overlap_1d(m, L, delta[k]);
    const long double k_mult = static_cast<long double>(mult) * inverse_power_r2(r2, p.s);
    window += k_mult;
    const long long missing = box.inner_volume() - c;
    if (missing != 0) body += k_mult * static_cast<long double>(missing);
  });
  return detail::finish_crossing(body.value(), window.value(), v_in, eps, p.kappa, tol, "t_sum");
}

/// T_L = sum_{i in Lambda_L, j notin Lambda_L} K_ij.
inline TailBound t_sum(const BoxSpec& box, const ModelParams& p, double tol) {
  BoxSpec b = box;
  b.a.reset();
  return t_sum_cutoff(b, p, tol);
}

/// Displacement histogram c(delta) = #{i in R : i + delta in R} of a finite
/// region by FFT autocorrelation of its indicator. Entry delta lives at
/// index (delta mod dims) of the returned row-major array.
struct DisplacementHistogram {
  std::vector<int> dims;
  Site span{1, 1, 1};
  std::vector<long long> counts;

  long long at(int d, const Site& delta) const {
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k) {
      int q = delta[k] % dims[k];
      if (q < 0) q += dims[k];
      idx = idx * dims[k] + static_cast<std::size_t>(q);
    }
    return counts[idx];
  }
};

inline DisplacementHistogram displacement_histogram(const Region& r) {
  check_dimension(r.d);
  const Extent e = extent(r);
  DisplacementHistogram h;
  for (int k = 0; k < r.d; ++k) {
    h.span[k] = e.hi[k] - e.lo[k] + 1;
    h.dims.push_back(2 * h.span[k]);
  }
  std::vector<double> indicator(fft::product(h.dims), 0.0);
  for (const auto& x : r.sites) {
    std::size_t idx = 0;
    for (int k = 0; k < r.d; ++k) idx = idx * h.dims[k] + static_cast<std::size_t>(x[k] - e.lo[k]);
    indicator[idx] = 1.0;
  }
  const auto corr = fft::circular_autocorrelation(h.dims, indicator);
  h.counts.resize(corr.size());
  for (std::size_t i = 0; i < corr.size(); ++i) h.counts[i] = std::llround(corr[i]);
  return h;
}

/// sum_{i in R, j notin R} K_ij for a finite connected region, by
/// |R| eps_s minus the interior sum from the displacement histogram.
inline TailBound crossing_sum(const Region& region, const ModelParams& p, double tol) {
  require_connected(region, "crossing_sum");
  if (region.d != p.d) throw DomainError("region and model dimensions differ");
  require_summable(p.d, p.s);
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (p.kappa == 0.0) return {0.0, 0.0};
  const int d = p.d;
  const double vol = static_cast<double>(region.size());
  const TailBound eps = detail::unit_epsilon_for(d, p.s, tol / p.kappa, vol);
  const DisplacementHistogram hist = displacement_histogram(region);
  Site reach{0, 0, 0};
  std::vector<int> dims;
  for (int k = 0; k < d; ++k) {
    reach[k] = hist.span[k] - 1;
    dims.push_back(2 * reach[k] + 1);
  }
  Accumulator body;
  Accumulator window;
  const long long n = static_cast<long long>(region.size());
  std::size_t total = fft::product(dims);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Site delta{0, 0, 0};
    std::size_t rest = idx;
    for (int k = d - 1; k >= 0; --k) {
      delta[k] = static_cast<int>(rest % dims[k]) - reach[k];
      rest /= dims[k];
    }
    const long long r2 = norm2(d, delta);
    if (r2 == 0) continue;
    const long double kd = inverse_power_r2(r2, p.s);
    window += kd;
    const long long missing = n - hist.at(d, delta);
    if (missing != 0) body += kd * static_cast<long double>(missing);
  }
  return detail::finish_crossing(body.value(), window.value(), vol, eps, p.kappa, tol, "crossing_sum");
}

/// Crossing sum per boundary bond, sum_{i in R, j notin R} K_ij / |dR|.
inline TailBound surface_ratio(const Region& region, const ModelParams& p, double tol) {
  const TailBound t = crossing_sum(region, p, tol);
  const double bonds = static_cast<double>(boundary_bond_count(region));
  return (1.0 / bonds) * t;
}

/// Box specialization of surface_ratio, T_ell / (2d (2 ell + 1)^{d-1}).
inline TailBound surface_ratio(const BoxSpec& box, const ModelParams& p, double tol) {
  const TailBound t = t_sum(box, p, tol);
  return (1.0 / static_cast<double>(box.boundary_bonds())) * t;
}

/// Constant bounding surface_ratio for s > d + 1: the continuum collar
/// (s-d)^{-1} int_{|z|>=1} |z|^{1-s} dz plus one single-site total.
inline double surface_ratio_bound(const ModelParams& p, double tol = 1e-10) {
  require_summable(p.d, p.s);
  if (!(p.s > p.d + 1.0)) throw DomainError("surface_ratio_bound needs s > d + 1");
  const double collar = unit_sphere_area(p.d) / ((p.s - p.d) * (p.s - p.d - 1.0));
  return p.kappa * collar + single_site_sum(p, tol).upper();
}

// ---------------------------------------------------------------------------
// Continuum integrals.

enum class QDomain {
  cube,            ///< S_1 = [-1, 1]^d
  cross_polytope,  ///< S_1 = {|x|_1 <= 1}; d <= 2 only
};

namespace detail {

/// int_0^2 (2 - u) (c + u^2)^{-s/2} du, c > 0, s != 2.
inline double tent_profile(double s, double c) {
  const double rc = std::sqrt(c);
  const double first = 2.0 * std::pow(rc, 1.0 - s) * power_profile_integral(s, 2.0 / rc);
  const double second = (std::pow(c + 4.0, 1.0 - 0.5 * s) - std::pow(c, 1.0 - 0.5 * s)) / (2.0 - s);
  return first - second;
}

}  // namespace detail

/// Q = int_{x in S_1} int_{y notin S_1} |x - y|^{-s} dy dx for d < s < d + 1.
/// For each face of the cube the inner y-integral is grouped by the exit
/// point of the ray from x; with h the distance of x to the face and u the
/// tangential offset this yields
///   Q = 2d/(s-d) * 2^{d-1} * int_0^2 h dh int_{[0,2]^{d-1}} prod(2 - u_k) (h^2 + |u|^2)^{-s/2} du.
/// The h -> 0 singularity h^{d-s} is removed by h = 2 v^{1/(d+1-s)}.
inline TailBound q_integral(int d, double s, double tol, QDomain domain = QDomain::cube) {
  check_dimension(d);
  if (!(s > d && s < d + 1.0)) throw DomainError("q_integral needs d < s < d + 1");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (domain == QDomain::cross_polytope && d == 3) {
    throw DomainError("cross-polytope domain is implemented for d <= 2 only");
  }
  const double lead = 2.0 * d / (s - d) * std::pow(2.0, d - 1);
  const double p = 1.0 / (d + 1.0 - s);
  const double rel = 1e-3 * tol;

  auto h_part = [&](double h) -> double {
    if (d == 1) return std::pow(h, -s);
    if (d == 2) return detail::tent_profile(s, h * h);
    const auto inner = integrate([&](double u) { return (2.0 - u) * detail::tent_profile(s, h * h + u * u); },
                                 0.0, 2.0, rel, 0.0, 400);
    return inner.value;
  };
  // h = 2 v^p, dh = 2 p v^{p-1} dv; h * h_part(h) ~ h^{d-s}.
  auto integrand = [&](double v) {
    if (v <= 0.0) return 0.0;
    const double h = 2.0 * std::pow(v, p);
    return h * h_part(h) * 2.0 * p * std::pow(v, p - 1.0);
  };
  const QuadResult q = integrate(integrand, 0.0, 1.0, rel, 0.0, 4000);
  double scale = lead;
  if (domain == QDomain::cross_polytope && d == 2) {
    // |x|_1 <= 1 is the cube rotated by 45 degrees and shrunk by 1/sqrt 2;
    // Q scales like length^{2d-s}.
    scale *= std::pow(2.0, -0.5 * (2.0 * d - s));
  }
  const double value = scale * q.value;
  const double err = scale * q.error + 1e-14 * std::abs(value);
  const TailBound r = TailBound::from_estimate(value, err);
  if (r.tail > tol * std::abs(value)) {
    throw ToleranceNotMet("q_integral: relative tolerance not met", r.value, r.tail);
  }
  return r;
}

/// C~_1 = int_{R^{d-1}} (1 + |z|^2)^{-s/2} dz = pi^{(d-1)/2} Gamma((s-d+1)/2) / Gamma(s/2).
inline double i1_constant(int d, double s) {
  return std::pow(std::numbers::pi, 0.5 * (d - 1)) * std::tgamma(0.5 * (s - d + 1.0)) / std::tgamma(0.5 * s);
}

inline void check_i_range(double L, double a, const char* who) {
  if (!(a >= 1.0) || !(L >= a) || !std::isfinite(L)) {
    throw DomainError(std::string(who) + ": need 1 <= a <= L");
  }
}

/// I_1(L, a) = int_a^L dx int_0^inf dy int_{R^{d-1}} dz [(x+y)^2 + |z|^2]^{-s/2}
/// in closed form.
inline double i1_closed_form(double L, double a, int d, double s) {
  require_summable(d, s);
  check_i_range(L, a, "i1_closed_form");
  if (L == a) return 0.0;
  const double c1 = i1_constant(d, s);
  const double e = d + 1.0 - s;
  if (std::abs(e) < 1e-12) return c1 * std::log(L / a);
  return c1 * (std::pow(L, e) - std::pow(a, e)) / ((s - d) * e);
}

namespace detail {

/// int_c^inf f(t) dt with t = c u^{-q}, suited to f ~ t^{-(1 + 1/q)}.
template <class F>
QuadResult integrate_to_infinity(F&& f, double c, double q, double rel) {
  auto g = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double t = c * std::pow(u, -q);
    return f(t) * c * q * std::pow(u, -q - 1.0);
  };
  return integrate(g, 0.0, 1.0, rel, 0.0, 400);
}

}  // namespace detail

/// I_1 by nested adaptive quadrature of its defining integral: x over
/// [a, L], y over [0, inf) and the radial part of z numerically.
inline TailBound i1_numeric(double L, double a, int d, double s, double tol) {
  require_summable(d, s);
  check_i_range(L, a, "i1_numeric");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (L == a) return {0.0, 0.0};
  const double rel = 1e-2 * tol;
  const double sphere = d >= 2 ? unit_sphere_area(d - 1) : 1.0;
  double inner_err = 0.0;
  // Integral of [c^2 + |z|^2]^{-s/2} over z in R^{d-1}.
  auto z_part = [&](double c) -> double {
    if (d == 1) return std::pow(c, -s);
    auto radial = [&](double rho) {
      return std::pow(rho, d - 2) * std::pow(c * c + rho * rho, -0.5 * s);
    };
    // rho < c carries most of the mass; the rest decays like rho^{d-2-s}.
    const auto near = integrate(radial, 0.0, c, rel);
    const auto far = detail::integrate_to_infinity(radial, c, 1.0 / (s - d + 1.0), rel);
    inner_err = std::max(inner_err, (near.error + far.error) / (near.value + far.value));
    return sphere * (near.value + far.value);
  };
  // Decay in y is (x+y)^{d-1-s}: q = 1/(s-d).
  auto y_part = [&](double x) {
    auto f = [&](double t) { return z_part(t); };
    const auto r = detail::integrate_to_infinity(f, x, 1.0 / (s - d), rel);
    inner_err = std::max(inner_err, r.error / r.value);
    return r.value;
  };
  // Integrate in log x so wide [a, L] ranges are balanced.
  auto x_integrand = [&](double lx) {
    const double x = std::exp(lx);
    return x * y_part(x);
  };
  const QuadResult q = integrate(x_integrand, std::log(a), std::log(L), rel);
  const double err = q.error + inner_err * std::abs(q.value) + 1e-14 * std::abs(q.value);
  const TailBound r = TailBound::from_estimate(q.value, err);
  if (r.tail > tol * std::abs(q.value)) {
    throw ToleranceNotMet("i1_numeric: relative tolerance not met", r.value, r.tail);
  }
  return r;
}

/// Corner kernel int_0^inf int_0^inf [(X+x)^2 + (Y+y)^2]^{-s/2} dx dy for
/// d = 2, reduced by the exact y-integral to
///   int_X^inf p^{1-s} [F_s(inf) - F_s(Y/p)] dp.
inline double i2_corner(double X, double Y, double s, double rel) {
  const double f_inf = power_profile_integral(s, std::numeric_limits<double>::infinity());
  auto f = [&](double p) { return std::pow(p, 1.0 - s) * (f_inf - power_profile_integral(s, Y / p)); };
  return detail::integrate_to_infinity(f, X, 1.0 / (s - 2.0), rel).value;
}

/// I_2(L, a) for d = 2: interaction between the square (a, L)^2 and the
/// opposite quarter plane, by nested adaptive quadrature.
inline TailBound i2_numeric(double L, double a, double s, double tol) {
  check_i_range(L, a, "i2_numeric");
  if (!(s > 2.0 && s <= 3.0)) throw DomainError("i2_numeric needs 2 < s <= 3 (d = 2)");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  if (L == a) return {0.0, 0.0};
  const double rel = 1e-2 * tol;
  const double la = std::log(a);
  const double lL = std::log(L);
  double inner_err = 0.0;
  auto over_y = [&](double x) {
    auto g = [&](double ly) {
      const double y = std::exp(ly);
      return y * i2_corner(x, y, s, rel);
    };
    const auto r = integrate(g, la, lL, rel);
    inner_err = std::max(inner_err, r.error / std::abs(r.value));
    return r.value;
  };
  const QuadResult q = integrate([&](double lx) { return std::exp(lx) * over_y(std::exp(lx)); }, la, lL, rel);
  const double err = q.error + inner_err * std::abs(q.value) + 1e-13 * std::abs(q.value);
  const TailBound r = TailBound::from_estimate(q.value, err);
  if (r.tail > tol * std::abs(q.value)) {
    throw ToleranceNotMet("i2_numeric: relative tolerance not met", r.value, r.tail);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Asymptotic fits.

enum class FitModel {
  pure_power,      ///< value = amplitude * L^exponent
  power_times_log, ///< value = amplitude * L^exponent ln L + subleading * L^exponent
};

struct FitResult {
  FitModel model = FitModel::pure_power;
  double amplitude = 0.0;
  double subleading = 0.0;
  double exponent = 0.0;
  double residual = 0.0;  ///< max relative deviation over the fitted points

  double operator()(double L) const {
    const double base = std::pow(L, exponent);
    if (model == FitModel::pure_power) return amplitude * base;
    return amplitude * base * std::log(L) + subleading * base;
  }
};

inline const char* to_string(FitModel m) {
  return m == FitModel::pure_power ? "pure_power" : "power_times_log";
}

/// Relative least-squares fit of (L, value) points with a fixed exponent
/// (2d - s for the power law, d - 1 for the marginal law).
inline FitResult asymptotic_fit(const std::vector<std::pair<double, double>>& points, FitModel model,
                                double exponent) {
  if (points.size() < 4) throw DomainError("asymptotic_fit needs at least 4 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [L, v] = points[i];
    if (!(L > 0.0) || !std::isfinite(v) || v == 0.0) throw DomainError("asymptotic_fit: bad point");
    if (i > 0 && !(L > points[i - 1].first)) throw DomainError("asymptotic_fit: L must increase strictly");
  }
  if (model == FitModel::power_times_log && points.front().first <= 1.0) {
    throw DomainError("asymptotic_fit: power_times_log needs L > 1");
  }
  FitResult fit;
  fit.model = model;
  fit.exponent = exponent;
  // Minimize sum ((A f + B g - v) / v)^2.
  double ff = 0, fg = 0, gg = 0, fv = 0, gv = 0;
  for (const auto& [L, v] : points) {
    const double base = std::pow(L, exponent);
    const double f = (model == FitModel::pure_power ? base : base * std::log(L)) / v;
    const double g = (model == FitModel::pure_power ? 0.0 : base) / v;
    ff += f * f;
    fg += f * g;
    gg += g * g;
    fv += f;
    gv += g;
  }
  if (model == FitModel::pure_power) {
    fit.amplitude = fv / ff;
  } else {
    const double det = ff * gg - fg * fg;
    if (!(std::abs(det) > 1e-12 * ff * gg)) throw DomainError("asymptotic_fit: degenerate design");
    fit.amplitude = (fv * gg - gv * fg) / det;
    fit.subleading = (gv * ff - fv * fg) / det;
  }
  for (const auto& [L, v] : points) {
    fit.residual = std::max(fit.residual, std::abs(fit(L) - v) / std::abs(v));
  }
  return fit;
}

/// Cutoff schedule a(L) used by verification scans: ceil(L^{(d+1-s)/2}) for
/// s < d + 1 and ceil(sqrt(ln L)) at s = d + 1, kept below L.
inline int cutoff_schedule(int d, double s, int L) {
  if (L < 2) return 0;
  const double e = d + 1.0 - s;
  double a = e > 1e-12 ? std::ceil(std::pow(L, 0.5 * e)) : std::ceil(std::sqrt(std::log(static_cast<double>(L))));
  if (e < -1e-12) a = 1.0;
  return std::clamp(static_cast<int>(a), 0, L - 1);
}

/// Boundary-sensitivity bound eps_L = 2 beta (|J| |dLambda_L| + T_L) for
/// the log-ratio of finite-volume partition functions.
inline double epsilon_l_bound(int L, const ModelParams& p, double tol = 1e-8) {
  if (L < 1) throw DomainError("epsilon_l_bound needs L >= 1");
  const double bonds = static_cast<double>(box_boundary_bonds(p.d, L));
  const double t = p.kappa == 0.0 ? 0.0 : t_sum(BoxSpec{p.d, L, {}}, p, tol * std::pow(2.0 * L + 1.0, p.d)).upper();
  return 2.0 * p.beta * (std::abs(p.J) * bonds + t);
}

}  // namespace lrising
