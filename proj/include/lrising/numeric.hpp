#pragma once

// Small numerical building blocks shared by the lattice-sum, quadrature and
// energy code: interval-valued results, extended-precision accumulation,
// Gauss-Legendre rules and a couple of special functions Boost does not
// cover for the argument ranges we need.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "lrising/errors.hpp"

namespace lrising {

/// A numerical value of a sum or integral with a rigorous error allowance.
/// The true quantity lies in [value, value + tail].
struct TailBound {
  double value = 0.0;
  double tail = 0.0;

  double upper() const noexcept { return value + tail; }
  double midpoint() const noexcept { return value + 0.5 * tail; }

  bool contains(double x) const noexcept { return x >= value && x <= upper(); }

  /// Bracket for an estimate known to within +-err.
  static TailBound from_estimate(double estimate, double err) noexcept {
    err = std::abs(err);
    return {estimate - err, 2.0 * err};
  }
};

/// True when two bracketed results are consistent (their intervals overlap).
inline bool overlaps(const TailBound& a, const TailBound& b) noexcept {
  return a.value <= b.upper() && b.value <= a.upper();
}

inline TailBound operator*(double c, const TailBound& t) noexcept {
  if (c >= 0.0) return {c * t.value, c * t.tail};
  return {c * t.upper(), -c * t.tail};
}

/// Extended-precision running sum. On x86-64 long double carries a 64-bit
/// mantissa; the Neumaier correction covers platforms where it does not.
class Accumulator {
 public:
  void add(long double x) noexcept {
    const long double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  Accumulator& operator+=(long double x) noexcept {
    add(x);
    return *this;
  }
  long double value() const noexcept { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

/// |r|^{-s} evaluated from the exact integer squared distance.
inline double inverse_power_r2(long long r2, double s) noexcept {
  return std::exp(-0.5 * s * std::log(static_cast<double>(r2)));
}

/// Rising factorial (x)_n.
inline double pochhammer(double x, int n) noexcept {
  double p = 1.0;
  for (int k = 0; k < n; ++k) p *= x + k;
  return p;
}

/// Surface area of the unit sphere S^{n-1} in R^n (n >= 1; n = 1 gives 2).
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Upper incomplete gamma Gamma(a, x) for x > 0 and any real a.
/// Negative orders are reached by the downward recurrence
/// Gamma(a, x) = (Gamma(a + 1, x) - x^a e^{-x}) / a.
inline double upper_gamma(double a, double x) {
  if (!(x > 0.0)) throw DomainError("upper_gamma: x must be positive");
  if (a > 0.0) return boost::math::tgamma(a, x);
  const double rounded = std::round(a);
  if (std::abs(a - rounded) < 1e-14) {
    // Integer order -n: start from Gamma(0, x) = E_1(x).
    double g = boost::math::expint(1, x);
    for (int k = 0; k > static_cast<int>(rounded); --k) {
      const double b = k - 1.0;
      g = (g - std::pow(x, b) * std::exp(-x)) / b;
    }
    return g;
  }
  // Lift to a positive order, then walk back down.
  int steps = 0;
  double top = a;
  while (top <= 0.0) {
    top += 1.0;
    ++steps;
  }
  double g = boost::math::tgamma(top, x);
  for (int k = 0; k < steps; ++k) {
    const double b = top - 1.0 - k;
    g = (g - std::pow(x, b) * std::exp(-x)) / b;
  }
  return g;
}

/// F_s(w) = integral_0^w (1 + t^2)^{-s/2} dt, odd in w, for s > 1.
inline double power_profile_integral(double s, double w) {
  if (w == 0.0) return 0.0;
  const double sign = w < 0.0 ? -1.0 : 1.0;
  const double aw = std::abs(w);
  if (std::isinf(aw)) {
    return sign * 0.5 * boost::math::beta(0.5, 0.5 * (s - 1.0));
  }
  const double x = aw * aw / (1.0 + aw * aw);
  return sign * 0.5 * boost::math::beta(0.5, 0.5 * (s - 1.0), x);
}

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: order must be positive");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * x * p2 - (j - 1.0) * p3) / j;
      }
      dp = n * (x * p1 - p2) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// Result of an adaptive 1D quadrature.
struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

struct KronrodPanel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double error = 0.0;
};

template <class F>
KronrodPanel kronrod15(F& f, double a, double b) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    kron += wgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += wg[j / 2] * (f1 + f2);
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval. Panels with
/// the largest error estimate are bisected until the summed error falls
/// below max(abs_tol, rel_tol*|I|) or the panel budget is spent; the
/// returned error is the summed |K15 - G7| estimate either way.
template <class F>
QuadResult integrate(F&& f, double a, double b, double rel_tol, double abs_tol = 0.0,
                     int max_panels = 2000) {
  if (a == b) return {};
  std::vector<detail::KronrodPanel> panels;
  panels.reserve(64);
  panels.push_back(detail::kronrod15(f, a, b));
  for (;;) {
    long double total = 0.0L;
    double err = 0.0;
    std::size_t worst = 0;
    for (std::size_t k = 0; k < panels.size(); ++k) {
      total += panels[k].value;
      err += panels[k].error;
      if (panels[k].error > panels[worst].error) worst = k;
    }
    const double v = static_cast<double>(total);
    const double target = std::max(abs_tol, rel_tol * std::abs(v));
    if (err <= target || static_cast<int>(panels.size()) >= max_panels) {
      return {v, err};
    }
    const auto p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) return {v, err};
    panels[worst] = detail::kronrod15(f, p.a, mid);
    panels.push_back(detail::kronrod15(f, mid, p.b));
  }
}

}  // namespace lrising
