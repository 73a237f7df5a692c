#pragma once

// Integer lattice geometry: sites, boxes Lambda_L = [-L, L]^d, row-major
// grids and finite regions (lattice animals) with their bond boundaries.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_set>
#include <vector>

#include "lrising/errors.hpp"

namespace lrising {

inline constexpr int kMaxDim = 3;

/// A point of Z^d; components beyond the dimension in use stay zero.
using Site = std::array<int, kMaxDim>;

inline void check_dimension(int d) {
  if (d < 1 || d > kMaxDim) throw DomainError("dimension must be 1, 2 or 3");
}

inline long long squared_distance(int d, const Site& i, const Site& j) noexcept {
  long long r2 = 0;
  for (int k = 0; k < d; ++k) {
    const long long dx = static_cast<long long>(i[k]) - j[k];
    r2 += dx * dx;
  }
  return r2;
}

inline long long ipow(long long base, int e) noexcept {
  long long r = 1;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

/// |Lambda_L| = (2L+1)^d.
inline long long box_volume(int d, long long L) noexcept { return ipow(2 * L + 1, d); }

/// Bonds with exactly one endpoint in Lambda_L: 2d(2L+1)^{d-1}.
inline long long box_boundary_bonds(int d, long long L) noexcept {
  return 2LL * d * ipow(2 * L + 1, d - 1);
}

/// Row-major grid of side^d sites with coordinates 0..side-1.
class Grid {
 public:
  Grid(int d, int side) : d_(d), side_(side) {
    check_dimension(d);
    if (side < 1) throw DomainError("grid side must be positive");
    size_ = static_cast<std::size_t>(ipow(side, d));
  }

  int dim() const noexcept { return d_; }
  int side() const noexcept { return side_; }
  std::size_t size() const noexcept { return size_; }

  std::size_t index(const Site& x) const noexcept {
    std::size_t idx = 0;
    for (int k = 0; k < d_; ++k) idx = idx * side_ + static_cast<std::size_t>(x[k]);
    return idx;
  }

  Site coords(std::size_t idx) const noexcept {
    Site x{0, 0, 0};
    for (int k = d_ - 1; k >= 0; --k) {
      x[k] = static_cast<int>(idx % side_);
      idx /= side_;
    }
    return x;
  }

  bool contains(const Site& x) const noexcept {
    for (int k = 0; k < d_; ++k) {
      if (x[k] < 0 || x[k] >= side_) return false;
    }
    return true;
  }

  /// Periodic wrap of each coordinate into [0, side).
  Site wrap(Site x) const noexcept {
    for (int k = 0; k < d_; ++k) {
      x[k] %= side_;
      if (x[k] < 0) x[k] += side_;
    }
    return x;
  }

 private:
  int d_;
  int side_;
  std::size_t size_;
};

/// Nearest-neighbour offsets of Z^d (2d of them).
inline std::vector<Site> unit_steps(int d) {
  std::vector<Site> steps;
  for (int k = 0; k < d; ++k) {
    Site e{0, 0, 0};
    e[k] = 1;
    steps.push_back(e);
    e[k] = -1;
    steps.push_back(e);
  }
  return steps;
}

inline Site operator+(Site a, const Site& b) noexcept {
  for (int k = 0; k < kMaxDim; ++k) a[k] += b[k];
  return a;
}

inline Site operator-(Site a, const Site& b) noexcept {
  for (int k = 0; k < kMaxDim; ++k) a[k] -= b[k];
  return a;
}

struct SiteHash {
  std::size_t operator()(const Site& x) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : x) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

/// A finite set of sites of Z^d.
struct Region {
  int d = 1;
  std::vector<Site> sites;

  std::size_t size() const noexcept { return sites.size(); }
};

/// The box Lambda_L as an explicit region.
inline Region box_region(int d, int L) {
  check_dimension(d);
  Region r{d, {}};
  const int n = 2 * L + 1;
  const Grid g(d, n);
  r.sites.reserve(g.size());
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    Site x = g.coords(idx);
    for (int k = 0; k < d; ++k) x[k] -= L;
    r.sites.push_back(x);
  }
  return r;
}

/// Per-axis bounding box of a region.
struct Extent {
  Site lo{0, 0, 0};
  Site hi{0, 0, 0};
};

inline Extent extent(const Region& r) {
  if (r.sites.empty()) throw DomainError("region is empty");
  Extent e{r.sites.front(), r.sites.front()};
  for (const auto& x : r.sites) {
    for (int k = 0; k < r.d; ++k) {
      e.lo[k] = std::min(e.lo[k], x[k]);
      e.hi[k] = std::max(e.hi[k], x[k]);
    }
  }
  return e;
}

/// |partial R|: bonds with one endpoint in R and the other outside.
inline long long boundary_bond_count(const Region& r) {
  const std::unordered_set<Site, SiteHash> in(r.sites.begin(), r.sites.end());
  if (in.size() != r.sites.size()) throw DomainError("region has repeated sites");
  long long count = 0;
  const auto steps = unit_steps(r.d);
  for (const auto& x : r.sites) {
    for (const auto& e : steps) {
      if (!in.count(x + e)) ++count;
    }
  }
  return count;
}

/// Nearest-neighbour connectivity.
inline bool is_connected(const Region& r) {
  if (r.sites.empty()) return false;
  const std::unordered_set<Site, SiteHash> in(r.sites.begin(), r.sites.end());
  std::unordered_set<Site, SiteHash> seen{r.sites.front()};
  std::queue<Site> frontier;
  frontier.push(r.sites.front());
  const auto steps = unit_steps(r.d);
  while (!frontier.empty()) {
    const Site x = frontier.front();
    frontier.pop();
    for (const auto& e : steps) {
      const Site y = x + e;
      if (in.count(y) && seen.insert(y).second) frontier.push(y);
    }
  }
  return seen.size() == in.size();
}

inline void require_connected(const Region& r, const std::string& who) {
  check_dimension(r.d);
  if (r.sites.empty()) throw DomainError(who + ": region is empty");
  if (!is_connected(r)) throw DomainError(who + ": region is not connected");
}

}  // namespace lrising
