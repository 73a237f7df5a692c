#pragma once

// Spin configurations, the Hamiltonian
//   H = -J sum_<ij> s_i s_j + 1/2 sum_{i != j} K_ij s_i s_j - h sum_i s_i,
// incremental flip energetics through cached local fields, the
// inside/outside interaction observable and a few spatial diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "lrising/errors.hpp"
#include "lrising/fft.hpp"
#include "lrising/kernel.hpp"
#include "lrising/lattice.hpp"
#include "lrising/numeric.hpp"

namespace lrising {

enum class Boundary { torus, fixed_exterior };

/// Spins outside the box for Boundary::fixed_exterior.
enum class Exterior { plus, minus, free };

inline int exterior_spin(Exterior e) noexcept {
  return e == Exterior::plus ? 1 : (e == Exterior::minus ? -1 : 0);
}

inline const char* to_string(Boundary b) { return b == Boundary::torus ? "torus" : "fixed_exterior"; }
inline const char* to_string(Exterior e) {
  return e == Exterior::plus ? "plus" : (e == Exterior::minus ? "minus" : "free");
}

/// +-1 spins on a box of side N (row-major), with a boundary policy. Every
/// mutation bumps a revision counter that local-field caches check against.
class SpinConfig {
 public:
  SpinConfig(int d, int N, Boundary boundary = Boundary::torus, Exterior exterior = Exterior::free, int fill = 1)
      : grid_(d, N), boundary_(boundary), exterior_(exterior) {
    if (fill != 1 && fill != -1) throw DomainError("spins must be +1 or -1");
    if (boundary == Boundary::torus && N < 3) throw DomainError("torus side must be at least 3");
    spins_.assign(grid_.size(), static_cast<std::int8_t>(fill));
  }

  int dim() const noexcept { return grid_.dim(); }
  int side() const noexcept { return grid_.side(); }
  std::size_t size() const noexcept { return spins_.size(); }
  const Grid& grid() const noexcept { return grid_; }
  Boundary boundary() const noexcept { return boundary_; }
  Exterior exterior() const noexcept { return exterior_; }
  std::uint64_t revision() const noexcept { return revision_; }

  int operator[](std::size_t i) const noexcept { return spins_[i]; }
  int at(const Site& x) const { return spins_[grid_.index(x)]; }
  const std::vector<std::int8_t>& spins() const noexcept { return spins_; }

  void set(std::size_t i, int v) {
    if (v != 1 && v != -1) throw DomainError("spins must be +1 or -1");
    spins_[i] = static_cast<std::int8_t>(v);
    ++revision_;
  }
  void flip(std::size_t i) noexcept {
    spins_[i] = static_cast<std::int8_t>(-spins_[i]);
    ++revision_;
  }
  void fill(int v) {
    for (std::size_t i = 0; i < spins_.size(); ++i) spins_[i] = static_cast<std::int8_t>(v);
    ++revision_;
  }
  void assign(const std::vector<std::int8_t>& s) {
    if (s.size() != spins_.size()) throw DomainError("spin array has wrong length");
    for (auto v : s) {
      if (v != 1 && v != -1) throw DomainError("spins must be +1 or -1");
    }
    spins_ = s;
    ++revision_;
  }

  long long magnetization_sum() const noexcept {
    long long m = 0;
    for (auto v : spins_) m += v;
    return m;
  }

 private:
  Grid grid_;
  Boundary boundary_;
  Exterior exterior_;
  std::vector<std::int8_t> spins_;
  std::uint64_t revision_ = 0;
};

struct EnergyBreakdown {
  double ferro = 0.0;      ///< -J sum over bonds
  double antiferro = 0.0;  ///< 1/2 sum K s s (plus exterior coupling)
  double field = 0.0;      ///< -h sum s
  double total = 0.0;
};

/// Per-site fields: phi_i = sum_j K_ij s_j (plus the fixed exterior's
/// long-range field) and nn_i = sum of neighbouring spins (exterior
/// neighbours included). Valid for one config revision.
struct LocalFieldCache {
  std::vector<double> phi;
  std::vector<int> nn;
  std::uint64_t revision = 0;
};

// ---------------------------------------------------------------------------
// Kernel tables.

/// Unit-amplitude periodized kernel indexed by wrapped displacement on a
/// torus of side N. The diagonal (self-image) entry is 0: the constant
/// sum over a site's own images does not depend on the configuration.
struct TorusKernelTable {
  int d = 1;
  int N = 3;
  double s = 2.0;
  std::vector<double> values;
  double max_tail = 0.0;
};

inline std::shared_ptr<const TorusKernelTable> torus_kernel_table(int d, int N, double s, double tol = 1e-13) {
  require_summable(d, s);
  static std::mutex mu;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<const TorusKernelTable>> memo;
  const auto key = std::make_tuple(d, N, s, tol);
  {
    std::lock_guard lock(mu);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  auto t = std::make_shared<TorusKernelTable>();
  t->d = d;
  t->N = N;
  t->s = s;
  const Grid g(d, N);
  t->values.assign(g.size(), 0.0);
  // Values depend only on the sorted |minimum image| components.
  std::map<Site, double> by_orbit;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    Site r = minimum_image(d, g.coords(idx), N);
    for (int k = 0; k < d; ++k) r[k] = std::abs(r[k]);
    std::sort(r.begin(), r.begin() + d);
    if (norm2(d, r) == 0) continue;
    auto it = by_orbit.find(r);
    if (it == by_orbit.end()) {
      const TailBound v = detail::ewald_periodic_sum(d, s, N, r, tol);
      t->max_tail = std::max(t->max_tail, v.tail);
      it = by_orbit.emplace(r, v.midpoint()).first;
    }
    t->values[idx] = it->second;
  }
  std::lock_guard lock(mu);
  return memo.emplace(key, std::move(t)).first->second;
}

/// Periodized single-site sum sum_{j != i} K^per_ij = sum over Z^d minus
/// the multiples of N, i.e. the homogeneous long-range field on a torus.
inline double periodized_single_site_sum(const ModelParams& p, int N) {
  const auto table = torus_kernel_table(p.d, N, p.s);
  Accumulator acc;
  for (double v : table->values) acc += v;
  return p.kappa * static_cast<double>(acc.value());
}

// ---------------------------------------------------------------------------
// Energy model: parameters plus immutable, shareable kernel data for one
// box shape and boundary policy.

class EnergyModel {
 public:
  EnergyModel(const ModelParams& p, int N, Boundary boundary, Exterior exterior = Exterior::free)
      : p_(p), grid_(p.d, N), boundary_(boundary), exterior_(exterior) {
    p_.validate(true);
    if (boundary == Boundary::torus && N < 3) throw DomainError("torus side must be at least 3");
    build_neighbours();
    if (boundary == Boundary::torus) {
      torus_ = torus_kernel_table(p.d, N, p.s);
    } else {
      build_open_kernel();
    }
  }

  const ModelParams& params() const noexcept { return p_; }
  const Grid& grid() const noexcept { return grid_; }
  int side() const noexcept { return grid_.side(); }
  Boundary boundary() const noexcept { return boundary_; }
  Exterior exterior() const noexcept { return exterior_; }

  /// Same kernels, different J, h, beta (kappa and s must match).
  EnergyModel with_params(const ModelParams& q) const {
    if (q.d != p_.d || q.s != p_.s) throw DomainError("with_params: d and s must match");
    EnergyModel m = *this;
    q.validate(true);
    m.p_ = q;
    return m;
  }

  /// Unit-amplitude long-range coupling between two box sites.
  double unit_kernel(std::size_t i, std::size_t j) const noexcept {
    if (boundary_ == Boundary::torus) return torus_->values[wrapped_offset(i, j)];
    return open_[squared_distance(p_.d, grid_.coords(i), grid_.coords(j))];
  }
  double kernel(std::size_t i, std::size_t j) const noexcept { return p_.kappa * unit_kernel(i, j); }

  /// Neighbours of site i; -1 marks an exterior neighbour (fixed exterior only).
  const int* neighbours(std::size_t i) const noexcept { return &nbr_[i * 2 * p_.d]; }
  int coordination() const noexcept { return 2 * p_.d; }

  /// Fixed-exterior long-range field at site i per unit exterior spin,
  /// psi_i = eps_s - sum_{j in box} |i - j|^{-s} (unit amplitude).
  double exterior_psi(std::size_t i) const noexcept { return psi_.empty() ? 0.0 : psi_[i]; }
  /// Tail carried by psi from eps_s (unit amplitude).
  double exterior_psi_tail() const noexcept { return psi_tail_; }

  void check(const SpinConfig& c) const {
    if (c.dim() != p_.d || c.side() != grid_.side() || c.boundary() != boundary_ ||
        (boundary_ == Boundary::fixed_exterior && c.exterior() != exterior_)) {
      throw DomainError("spin configuration does not match the energy model");
    }
  }

  // -- energies -------------------------------------------------------------

  /// O(N^{2d}) double sum; reference for every faster path.
  EnergyBreakdown total_energy_direct(const SpinConfig& c) const {
    check(c);
    const std::size_t n = c.size();
    const int b = ext_spin();
    Accumulator bonds;
    Accumulator lr;
    Accumulator field;
    for (std::size_t i = 0; i < n; ++i) {
      const int si = c[i];
      const int* nb = neighbours(i);
      for (int k = 0; k < coordination(); ++k) {
        if (nb[k] < 0) {
          bonds += 2.0L * si * b;  // exterior bond, counted once below after halving
        } else {
          bonds += static_cast<long double>(si) * c[static_cast<std::size_t>(nb[k])];
        }
      }
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) row += unit_kernel(i, j) * c[j];
      }
      lr += static_cast<long double>(si) * row;
      if (b != 0) lr += 2.0L * si * b * exterior_psi(i);
      field += si;
    }
    EnergyBreakdown e;
    e.ferro = -p_.J * 0.5 * static_cast<double>(bonds.value());
    e.antiferro = p_.kappa * 0.5 * static_cast<double>(lr.value());
    e.field = -p_.h * static_cast<double>(field.value());
    e.total = e.ferro + e.antiferro + e.field;
    return e;
  }

  /// Torus only: long-range part by circular convolution, O(N^d log N).
  EnergyBreakdown total_energy_fast(const SpinConfig& c) const {
    check(c);
    if (boundary_ != Boundary::torus) throw DomainError("total_energy_fast needs torus boundary");
    const auto phi = long_range_field(c);
    Accumulator lr;
    Accumulator bonds;
    Accumulator field;
    for (std::size_t i = 0; i < c.size(); ++i) {
      lr += static_cast<long double>(c[i]) * phi[i];
      const int* nb = neighbours(i);
      for (int k = 0; k < coordination(); ++k) bonds += c[i] * c[static_cast<std::size_t>(nb[k])];
      field += c[i];
    }
    EnergyBreakdown e;
    e.ferro = -p_.J * 0.5 * static_cast<double>(bonds.value());
    e.antiferro = 0.5 * static_cast<double>(lr.value());
    e.field = -p_.h * static_cast<double>(field.value());
    e.total = e.ferro + e.antiferro + e.field;
    return e;
  }

  /// Energy from a consistent cache in O(N^d).
  EnergyBreakdown energy_from_cache(const SpinConfig& c, const LocalFieldCache& cache) const {
    require_fresh(c, cache);
    const int b = ext_spin();
    Accumulator bonds;
    Accumulator lr;
    Accumulator field;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const int si = c[i];
      const double ext_phi = b * p_.kappa * exterior_psi(i);
      const int ext_nn = b * exterior_neighbours(i);
      bonds += 0.5L * si * (cache.nn[i] - ext_nn) + static_cast<long double>(si) * ext_nn;
      lr += 0.5L * si * (cache.phi[i] - ext_phi) + static_cast<long double>(si) * ext_phi;
      field += si;
    }
    EnergyBreakdown e;
    e.ferro = -p_.J * static_cast<double>(bonds.value());
    e.antiferro = static_cast<double>(lr.value());
    e.field = -p_.h * static_cast<double>(field.value());
    e.total = e.ferro + e.antiferro + e.field;
    return e;
  }

  // -- local fields ---------------------------------------------------------

  LocalFieldCache build_cache(const SpinConfig& c) const {
    check(c);
    LocalFieldCache cache;
    cache.phi = long_range_field(c);
    const int b = ext_spin();
    for (std::size_t i = 0; i < c.size(); ++i) cache.phi[i] += b * p_.kappa * exterior_psi(i);
    cache.nn.assign(c.size(), 0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const int* nb = neighbours(i);
      int sum = 0;
      for (int k = 0; k < coordination(); ++k) sum += nb[k] < 0 ? b : c[static_cast<std::size_t>(nb[k])];
      cache.nn[i] = sum;
    }
    cache.revision = c.revision();
    return cache;
  }

  /// Recompute from scratch and compare; throws StaleCache on mismatch.
  void audit(const SpinConfig& c, const LocalFieldCache& cache, double tol = 1e-9) const {
    if (cache.phi.size() != c.size() || cache.nn.size() != c.size()) throw StaleCache("cache size mismatch");
    const LocalFieldCache fresh = build_cache(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (fresh.nn[i] != cache.nn[i] || std::abs(fresh.phi[i] - cache.phi[i]) > tol) {
        throw StaleCache("local field cache disagrees with recomputation at site " + std::to_string(i));
      }
    }
  }

  /// Energy change of flipping one spin: 2 s (J nn - phi + h).
  double delta_flip(const SpinConfig& c, const LocalFieldCache& cache, std::size_t site) const {
    require_fresh(c, cache);
    const int s = c[site];
    return 2.0 * s * (p_.J * cache.nn[site] - cache.phi[site] + p_.h);
  }

  /// Flip one spin and update the cache: O(N^d) for phi, O(d) for nn.
  void apply_flip(SpinConfig& c, LocalFieldCache& cache, std::size_t site) const {
    require_fresh(c, cache);
    c.flip(site);
    const double step = 2.0 * p_.kappa * c[site];
    if (step != 0.0) {
      if (boundary_ == Boundary::torus) {
        const auto& tab = torus_->values;
        const int N = grid_.side();
        const Site x = grid_.coords(site);
        // phi_j += step * K(j - site), walking j in row-major order.
        std::size_t j = 0;
        Site y{0, 0, 0};
        for (;;) {
          std::size_t off = 0;
          for (int k = 0; k < p_.d; ++k) {
            int q = y[k] - x[k];
            if (q < 0) q += N;
            off = off * N + static_cast<std::size_t>(q);
          }
          cache.phi[j] += step * tab[off];
          ++j;
          int k = p_.d - 1;
          while (k >= 0 && ++y[k] == N) y[k--] = 0;
          if (k < 0) break;
        }
      } else {
        for (std::size_t j = 0; j < c.size(); ++j) {
          if (j != site) cache.phi[j] += step * unit_kernel(j, site);
        }
      }
    }
    const int* nb = neighbours(site);
    for (int k = 0; k < coordination(); ++k) {
      if (nb[k] >= 0) cache.nn[static_cast<std::size_t>(nb[k])] += 2 * c[site];
    }
    cache.revision = c.revision();
  }

  /// E(s') - E(s) for s' = s with the region flipped. Region sites are box
  /// coordinates (wrapped on a torus).
  double droplet_flip_delta(const SpinConfig& c, const LocalFieldCache& cache, const Region& region) const {
    require_fresh(c, cache);
    require_connected(region, "droplet_flip_delta");
    std::vector<std::size_t> idx;
    std::unordered_set<std::size_t> in;
    for (const auto& x : region.sites) {
      const Site y = boundary_ == Boundary::torus ? grid_.wrap(x) : x;
      if (!grid_.contains(y)) throw DomainError("droplet region leaves the box");
      const std::size_t i = grid_.index(y);
      if (!in.insert(i).second) throw DomainError("droplet region has repeated sites");
      idx.push_back(i);
    }
    Accumulator linear;
    Accumulator bonds;
    Accumulator pairs;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const std::size_t i = idx[a];
      const int si = c[i];
      linear += si * (p_.J * cache.nn[i] - cache.phi[i] + p_.h);
      const int* nb = neighbours(i);
      for (int k = 0; k < coordination(); ++k) {
        if (nb[k] >= 0 && in.count(static_cast<std::size_t>(nb[k]))) {
          bonds += si * c[static_cast<std::size_t>(nb[k])];
        }
      }
      double row = 0.0;
      for (std::size_t b2 = 0; b2 < idx.size(); ++b2) {
        if (b2 != a) row += unit_kernel(i, idx[b2]) * c[idx[b2]];
      }
      pairs += static_cast<long double>(si) * row;
    }
    return static_cast<double>(2.0L * linear.value() - 2.0L * p_.J * bonds.value() +
                               2.0L * p_.kappa * pairs.value());
  }

  // -- observables ----------------------------------------------------------

  /// Centre site of the box; Lambda_L sits at centre + [-L, L]^d.
  Site centre() const noexcept {
    Site c{0, 0, 0};
    for (int k = 0; k < p_.d; ++k) c[k] = grid_.side() / 2;
    return c;
  }

  /// T_L(s) = sum_{i in Lambda_L, j in box \ Lambda_L} K_ij s_i s_j with the
  /// open kernel on coordinates unwrapped around the box centre; a fixed
  /// exterior also contributes sum_{i in Lambda_L} s_i b psi_i.
  /// Torus requires 2L + 1 <= N/2. With unit = true the amplitude kappa is
  /// replaced by 1 (the shape of the observable, defined even at kappa = 0).
  double interaction_observable(const SpinConfig& c, int L, bool unit = false) const {
    check(c);
    const int N = grid_.side();
    if (L < 0) throw DomainError("inner box half-side must be >= 0");
    if (boundary_ == Boundary::torus) {
      if (2 * (2 * L + 1) > N) throw DomainError("interaction_observable: inner box must be <= half the torus");
    } else if (2 * L + 1 > N) {
      throw DomainError("interaction_observable: inner box exceeds the configured box");
    }
    const Site c0 = centre();
    // Unwrapped offsets from the centre for every box site.
    std::vector<Site> rel(c.size());
    std::vector<char> inside(c.size(), 0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      Site y = grid_.coords(j) - c0;
      if (boundary_ == Boundary::torus) {
        for (int k = 0; k < p_.d; ++k) {
          if (y[k] >= N - N / 2) y[k] -= N;
          if (y[k] < -(N / 2)) y[k] += N;
        }
      }
      rel[j] = y;
      bool in = true;
      for (int k = 0; k < p_.d; ++k) in = in && std::abs(y[k]) <= L;
      inside[j] = in ? 1 : 0;
    }
    const int b = ext_spin();
    Accumulator acc;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!inside[i]) continue;
      double row = 0.0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        if (inside[j]) continue;
        row += inverse_power_r2(squared_distance(p_.d, rel[i], rel[j]), p_.s) * c[j];
      }
      acc += static_cast<long double>(c[i]) * row;
      if (b != 0) acc += static_cast<long double>(c[i]) * b * exterior_psi(i);
    }
    return (unit ? 1.0 : p_.kappa) * static_cast<double>(acc.value());
  }

 private:
  int ext_spin() const noexcept { return boundary_ == Boundary::fixed_exterior ? exterior_spin(exterior_) : 0; }

  int exterior_neighbours(std::size_t i) const noexcept {
    int n = 0;
    const int* nb = neighbours(i);
    for (int k = 0; k < coordination(); ++k) n += nb[k] < 0;
    return n;
  }

  void require_fresh(const SpinConfig& c, const LocalFieldCache& cache) const {
    if (cache.phi.size() != c.size() || cache.nn.size() != c.size() || cache.revision != c.revision()) {
      throw StaleCache("local field cache was built for a different configuration revision");
    }
  }

  std::size_t wrapped_offset(std::size_t i, std::size_t j) const noexcept {
    const Site a = grid_.coords(i);
    const Site b = grid_.coords(j);
    const int N = grid_.side();
    std::size_t off = 0;
    for (int k = 0; k < p_.d; ++k) {
      int q = a[k] - b[k];
      if (q < 0) q += N;
      off = off * N + static_cast<std::size_t>(q);
    }
    return off;
  }

  void build_neighbours() {
    const int d = p_.d;
    const auto steps = unit_steps(d);
    nbr_.assign(grid_.size() * 2 * d, -1);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const Site x = grid_.coords(i);
      for (int k = 0; k < 2 * d; ++k) {
        Site y = x + steps[k];
        if (boundary_ == Boundary::torus) y = grid_.wrap(y);
        if (grid_.contains(y)) nbr_[i * 2 * d + k] = static_cast<int>(grid_.index(y));
      }
    }
  }

  void build_open_kernel() {
    const int d = p_.d;
    const long long n = grid_.side() - 1;
    open_.assign(static_cast<std::size_t>(d * n * n + 1), 0.0);
    for (std::size_t r2 = 1; r2 < open_.size(); ++r2) open_[r2] = inverse_power_r2(static_cast<long long>(r2), p_.s);
    if (exterior_ == Exterior::free) return;
    // psi_i = eps_s - sum_{j in box, j != i} |i - j|^{-s}.
    const double eps_tol = d == 3 ? 1e-10 : 1e-12;
    const TailBound eps = unit_single_site_sum(d, p_.s, eps_tol);
    const auto inside = box_field(std::vector<double>(grid_.size(), 1.0));
    psi_.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) psi_[i] = eps.midpoint() - inside[i];
    psi_tail_ = eps.tail;
  }

  /// Unit-amplitude open-kernel field of an arbitrary box array, by linear
  /// convolution on a zero-padded grid of side 2N.
  std::vector<double> box_field(const std::vector<double>& values) const {
    const int d = p_.d;
    const int N = grid_.side();
    const int M = 2 * N;
    const Grid padded(d, M);
    std::vector<int> dims(d, M);
    std::vector<double> a(padded.size(), 0.0);
    std::vector<double> kern(padded.size(), 0.0);
    for (std::size_t i = 0; i < grid_.size(); ++i) a[padded.index(grid_.coords(i))] = values[i];
    for (std::size_t idx = 0; idx < padded.size(); ++idx) {
      Site q = padded.coords(idx);
      bool ok = true;
      for (int k = 0; k < d; ++k) {
        if (q[k] >= N) q[k] -= M;
        ok = ok && std::abs(q[k]) <= N - 1;
      }
      const long long r2 = norm2(d, q);
      if (ok && r2 > 0) kern[idx] = open_[static_cast<std::size_t>(r2)];
    }
    const auto conv = fft::circular_convolution(dims, a, kern);
    std::vector<double> out(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = conv[padded.index(grid_.coords(i))];
    return out;
  }

  /// kappa * sum_j K_ij s_j over box sites (no exterior part).
  std::vector<double> long_range_field(const SpinConfig& c) const {
    std::vector<double> sig(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) sig[i] = c[i];
    std::vector<double> phi;
    if (boundary_ == Boundary::torus) {
      std::vector<int> dims(p_.d, grid_.side());
      phi = fft::circular_convolution(dims, sig, torus_->values);
    } else {
      phi = box_field(sig);
    }
    for (auto& v : phi) v *= p_.kappa;
    return phi;
  }

  ModelParams p_;
  Grid grid_;
  Boundary boundary_;
  Exterior exterior_;
  std::vector<int> nbr_;
  std::shared_ptr<const TorusKernelTable> torus_;
  std::vector<double> open_;
  std::vector<double> psi_;
  double psi_tail_ = 0.0;
};

// ---------------------------------------------------------------------------
// Diagnostics.

/// Mean spin over the box origin + [0, side)^d (wrapped on a torus).
inline double block_magnetization(const SpinConfig& c, const Site& origin, int side) {
  if (side < 1 || side > c.side()) throw DomainError("block side out of range");
  const Grid block(c.dim(), side);
  long long sum = 0;
  for (std::size_t b = 0; b < block.size(); ++b) {
    Site x = origin + block.coords(b);
    if (c.boundary() == Boundary::torus) {
      x = c.grid().wrap(x);
    } else if (!c.grid().contains(x)) {
      throw DomainError("block leaves the box");
    }
    sum += c.at(x);
  }
  return static_cast<double>(sum) / static_cast<double>(block.size());
}

/// Mean spin over Lambda_L centred in the box.
inline double block_magnetization(const SpinConfig& c, int L) {
  if (L < 0 || 2 * L + 1 > c.side()) throw DomainError("block does not fit in the box");
  Site origin{0, 0, 0};
  for (int k = 0; k < c.dim(); ++k) origin[k] = c.side() / 2 - L;
  return block_magnetization(c, origin, 2 * L + 1);
}

/// S(k) = |sum_j s_j e^{i k.j}|^2 / N^d on the momentum grid k = 2 pi n / N,
/// indexed row-major by n.
inline std::vector<double> structure_factor(const SpinConfig& c) {
  std::vector<int> dims(c.dim(), c.side());
  fft::ComplexTransform t(dims);
  std::vector<std::complex<double>> x(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) x[i] = c[i];
  const auto f = t.forward(x);
  std::vector<double> out(f.size());
  const double n = static_cast<double>(c.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = std::norm(f[i]) / n;
  return out;
}

struct StructurePeak {
  Site momentum{0, 0, 0};  ///< integer n with k = 2 pi n / N
  double value = 0.0;
  double at_zero = 0.0;  ///< S(0)
};

/// Largest S(k); ties go to the lowest row-major index.
inline StructurePeak structure_peak(const SpinConfig& c) {
  const auto sf = structure_factor(c);
  std::size_t best = 0;
  for (std::size_t i = 1; i < sf.size(); ++i) {
    if (sf[i] > sf[best] + 1e-9) best = i;
  }
  return {c.grid().coords(best), sf[best], sf[0]};
}

}  // namespace lrising
