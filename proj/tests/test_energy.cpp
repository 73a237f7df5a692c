#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "lrising/checkpoint.hpp"
#include "lrising/energy.hpp"
#include "lrising/errors.hpp"
#include "lrising/random.hpp"
#include "lrising/sums.hpp"

using namespace lrising;

namespace {

ModelParams params(int d, double s, double J, double kappa, double h = 0.0) {
  ModelParams p;
  p.d = d;
  p.s = s;
  p.J = J;
  p.kappa = kappa;
  p.h = h;
  return p;
}

SpinConfig random_config(int d, int N, Rng& rng, Boundary b = Boundary::torus, Exterior e = Exterior::free) {
  SpinConfig c(d, N, b, e);
  for (std::size_t i = 0; i < c.size(); ++i) c.set(i, rng.spin());
  return c;
}

/// Free-boundary energy from the pair definition, sharing nothing with EnergyModel.
double free_energy_by_pairs(const SpinConfig& c, const ModelParams& p) {
  const Grid& g = c.grid();
  long double e = 0.0L;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Site x = g.coords(i);
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const Site y = g.coords(j);
      const long long r2 = squared_distance(p.d, x, y);
      const long double ss = c[i] * c[j];
      if (r2 == 1) e -= p.J * ss;
      e += coupling(x, y, p) * ss;
    }
    e -= p.h * c[i];
  }
  return static_cast<double>(e);
}

}  // namespace

TEST(SpinConfig, RejectsBadSpinsAndTinyTorus) {
  SpinConfig c(2, 4);
  EXPECT_THROW(c.set(0, 0), DomainError);
  EXPECT_THROW(c.assign(std::vector<std::int8_t>(3, 1)), DomainError);
  EXPECT_THROW(SpinConfig(1, 2), DomainError);
  EXPECT_NO_THROW(SpinConfig(1, 2, Boundary::fixed_exterior, Exterior::plus));
}

TEST(SpinConfig, RevisionAdvancesOnEveryMutation) {
  SpinConfig c(1, 5);
  const auto r0 = c.revision();
  c.flip(2);
  c.set(1, -1);
  c.fill(1);
  EXPECT_EQ(c.revision(), r0 + 3);
}

TEST(EnergyModel, FreeBoundaryMatchesPairDefinition) {
  Rng rng(3);
  for (int d = 1; d <= 3; ++d) {
    const int N = d == 3 ? 3 : 5;
    const ModelParams p = params(d, d + 0.9, 0.8, 0.6, 0.25);
    const EnergyModel model(p, N, Boundary::fixed_exterior, Exterior::free);
    for (int k = 0; k < 5; ++k) {
      const SpinConfig c = random_config(d, N, rng, Boundary::fixed_exterior, Exterior::free);
      EXPECT_NEAR(model.total_energy_direct(c).total, free_energy_by_pairs(c, p), 1e-11);
    }
  }
}

// psi at the end of a 3-site chain: sum_{k>=1} k^-2 + sum_{k>=3} k^-2.
TEST(EnergyModel, ExteriorFieldClosedForm) {
  const EnergyModel model(params(1, 2.0, 1.0, 1.0), 3, Boundary::fixed_exterior, Exterior::plus);
  const double z2 = std::numbers::pi * std::numbers::pi / 6.0;
  EXPECT_NEAR(model.exterior_psi(0), 2.0 * z2 - 1.25, 1e-11);
  EXPECT_NEAR(model.exterior_psi(1), 2.0 * z2 - 2.0, 1e-11);
  EXPECT_NEAR(model.exterior_psi(2), model.exterior_psi(0), 1e-14);
}

TEST(EnergyModel, FastMatchesDirectOnTorus) {
  Rng rng(4);
  for (int d = 1; d <= 3; ++d) {
    const int N = d == 1 ? 32 : (d == 2 ? 12 : 5);
    const EnergyModel model(params(d, d + 0.5, 1.0, 0.7, -0.2), N, Boundary::torus);
    for (int k = 0; k < 5; ++k) {
      const SpinConfig c = random_config(d, N, rng);
      const double a = model.total_energy_direct(c).total;
      EXPECT_NEAR(model.total_energy_fast(c).total, a, 1e-10 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(EnergyModel, CacheEnergyMatchesDirect) {
  Rng rng(5);
  for (Boundary b : {Boundary::torus, Boundary::fixed_exterior}) {
    for (Exterior e : {Exterior::plus, Exterior::minus, Exterior::free}) {
      const EnergyModel model(params(2, 3.2, 1.0, 0.9, 0.1), 6, b, e);
      const SpinConfig c = random_config(2, 6, rng, b, e);
      const LocalFieldCache cache = model.build_cache(c);
      EXPECT_NEAR(model.energy_from_cache(c, cache).total, model.total_energy_direct(c).total, 1e-10);
    }
  }
}

TEST(EnergyModel, FlipDeltaMatchesRecomputation) {
  Rng rng(6);
  for (Boundary b : {Boundary::torus, Boundary::fixed_exterior}) {
    const EnergyModel model(params(2, 2.6, 1.2, 0.8, 0.3), 7, b, Exterior::minus);
    SpinConfig c = random_config(2, 7, rng, b, Exterior::minus);
    LocalFieldCache cache = model.build_cache(c);
    for (int k = 0; k < 60; ++k) {
      const std::size_t site = rng.index(c.size());
      const double before = model.total_energy_direct(c).total;
      const double predicted = model.delta_flip(c, cache, site);
      model.apply_flip(c, cache, site);
      EXPECT_NEAR(model.total_energy_direct(c).total - before, predicted, 1e-10);
    }
    EXPECT_NO_THROW(model.audit(c, cache));
  }
}

TEST(EnergyModel, GlobalFlipSymmetryAtZeroField) {
  Rng rng(7);
  const EnergyModel model(params(2, 3.0, 1.0, 1.0, 0.0), 8, Boundary::torus);
  for (int k = 0; k < 10; ++k) {
    SpinConfig c = random_config(2, 8, rng);
    const double e = model.total_energy_direct(c).total;
    for (std::size_t i = 0; i < c.size(); ++i) c.flip(i);
    EXPECT_NEAR(model.total_energy_direct(c).total, e, 1e-11);
  }
}

TEST(EnergyModel, StaleCacheIsDetected) {
  const EnergyModel model(params(1, 2.0, 1.0, 1.0), 6, Boundary::torus);
  SpinConfig c(1, 6);
  LocalFieldCache cache = model.build_cache(c);
  c.flip(0);
  EXPECT_THROW(model.delta_flip(c, cache, 1), StaleCache);
  cache = model.build_cache(c);
  cache.phi[3] += 1e-3;
  EXPECT_THROW(model.audit(c, cache), StaleCache);
}

TEST(EnergyModel, RejectsMismatchedConfig) {
  const EnergyModel model(params(2, 3.0, 1.0, 1.0), 6, Boundary::torus);
  EXPECT_THROW(model.total_energy_direct(SpinConfig(2, 5)), DomainError);
  EXPECT_THROW(model.total_energy_direct(SpinConfig(1, 6)), DomainError);
}

TEST(Droplet, SetFlipMatchesRecomputation) {
  Rng rng(8);
  for (Boundary b : {Boundary::torus, Boundary::fixed_exterior}) {
    const EnergyModel model(params(2, 3.3, 0.9, 0.7, 0.2), 8, b, Exterior::plus);
    SpinConfig c = random_config(2, 8, rng, b, Exterior::plus);
    const LocalFieldCache cache = model.build_cache(c);
    Region r{2, {}};
    for (int x = 2; x < 5; ++x) {
      for (int y = 1; y < 4; ++y) r.sites.push_back(Site{x, y, 0});
    }
    r.sites.push_back(Site{5, 2, 0});
    const double before = model.total_energy_direct(c).total;
    const double predicted = model.droplet_flip_delta(c, cache, r);
    for (const auto& x : r.sites) c.flip(c.grid().index(x));
    EXPECT_NEAR(model.total_energy_direct(c).total - before, predicted, 1e-10);
  }
}

// On an all-plus background the flip cost is 2J|dR| - 2 kappa sum_{i in R, j notin R} K_ij.
TEST(Droplet, PeierlsIdentityOnPlusBackground) {
  const ModelParams p = params(2, 3.5, 1.3, 0.6);
  const int N = 9;
  const EnergyModel model(p, N, Boundary::fixed_exterior, Exterior::plus);
  const SpinConfig c(2, N, Boundary::fixed_exterior, Exterior::plus);
  const LocalFieldCache cache = model.build_cache(c);
  Region r{2, {Site{3, 3, 0}, Site{4, 3, 0}, Site{4, 4, 0}, Site{4, 5, 0}, Site{5, 5, 0}}};
  const double cross = crossing_sum(r, p, 1e-11).midpoint();
  const double expect = 2.0 * p.J * static_cast<double>(boundary_bond_count(r)) - 2.0 * cross;
  EXPECT_NEAR(model.droplet_flip_delta(c, cache, r), expect, 1e-9);
}

// With the inner box filling the whole box under a +1 exterior, the all-plus
// observable is the box crossing sum itself.
TEST(Observable, AllPlusFixedExteriorEqualsTSum) {
  for (int d = 1; d <= 2; ++d) {
    const int L = 3;
    const ModelParams p = params(d, d + 0.6, 1.0, 0.0);
    const EnergyModel model(p, 2 * L + 1, Boundary::fixed_exterior, Exterior::plus);
    const SpinConfig c(d, 2 * L + 1, Boundary::fixed_exterior, Exterior::plus);
    const double t = t_sum(BoxSpec{d, L, {}}, p.unit_amplitude(), 1e-9).midpoint();
    EXPECT_NEAR(model.interaction_observable(c, L, true), t, 1e-8);
    EXPECT_EQ(model.interaction_observable(c, L), 0.0);
  }
}

TEST(Observable, TorusWindowMustFit) {
  const EnergyModel model(params(2, 3.0, 1.0, 1.0), 10, Boundary::torus);
  const SpinConfig c(2, 10);
  EXPECT_NO_THROW(model.interaction_observable(c, 2));
  EXPECT_THROW(model.interaction_observable(c, 3), DomainError);
}

TEST(Observable, OddUnderExteriorReversal) {
  Rng rng(9);
  const ModelParams p = params(2, 3.0, 1.0, 1.0);
  const EnergyModel plus(p, 7, Boundary::fixed_exterior, Exterior::plus);
  const EnergyModel minus(p, 7, Boundary::fixed_exterior, Exterior::minus);
  SpinConfig a = random_config(2, 7, rng, Boundary::fixed_exterior, Exterior::plus);
  SpinConfig b(2, 7, Boundary::fixed_exterior, Exterior::minus);
  for (std::size_t i = 0; i < a.size(); ++i) b.set(i, -a[i]);
  EXPECT_NEAR(plus.interaction_observable(a, 2), minus.interaction_observable(b, 2), 1e-12);
}

TEST(StructureFactor, StripesPeakAwayFromZero) {
  SpinConfig c(1, 4);
  c.set(2, -1);
  c.set(3, -1);
  const auto sf = structure_factor(c);
  ASSERT_EQ(sf.size(), 4u);
  EXPECT_NEAR(sf[0], 0.0, 1e-12);
  EXPECT_NEAR(sf[1], 2.0, 1e-12);
  EXPECT_NEAR(sf[2], 0.0, 1e-12);
  EXPECT_NEAR(sf[3], 2.0, 1e-12);
  const StructurePeak peak = structure_peak(c);
  EXPECT_EQ(peak.momentum[0], 1);
}

TEST(StructureFactor, SumsToSiteCount) {
  Rng rng(10);
  const SpinConfig c = random_config(2, 8, rng);
  double total = 0.0;
  for (double v : structure_factor(c)) total += v;
  EXPECT_NEAR(total, 64.0, 1e-9);
  const StructurePeak uniform = structure_peak(SpinConfig(2, 8));
  EXPECT_EQ(uniform.momentum, (Site{0, 0, 0}));
  EXPECT_NEAR(uniform.value, 64.0, 1e-9);
}

TEST(BlockMagnetization, CentredBlocks) {
  SpinConfig c(2, 5);
  c.set(c.grid().index(Site{2, 2, 0}), -1);
  EXPECT_DOUBLE_EQ(block_magnetization(c, 0), -1.0);
  EXPECT_DOUBLE_EQ(block_magnetization(c, 1), 7.0 / 9.0);
  EXPECT_THROW(block_magnetization(c, 3), DomainError);
}

TEST(Checkpoint, RoundTripsExactly) {
  Rng rng(12);
  Checkpoint cp{params(2, 3.25, 1.5, 0.75, 0.125), 987654321ULL, 4242,
                random_config(2, 6, rng, Boundary::fixed_exterior, Exterior::minus)};
  cp.params.beta = 0.625;
  std::stringstream buf;
  write_checkpoint(buf, cp);
  const Checkpoint back = read_checkpoint(buf);
  EXPECT_EQ(back.params.s, cp.params.s);
  EXPECT_EQ(back.params.J, cp.params.J);
  EXPECT_EQ(back.params.kappa, cp.params.kappa);
  EXPECT_EQ(back.params.h, cp.params.h);
  EXPECT_EQ(back.params.beta, cp.params.beta);
  EXPECT_EQ(back.seed, cp.seed);
  EXPECT_EQ(back.sweep, cp.sweep);
  EXPECT_EQ(back.config.boundary(), Boundary::fixed_exterior);
  EXPECT_EQ(back.config.exterior(), Exterior::minus);
  EXPECT_EQ(back.config.spins(), cp.config.spins());
}

TEST(Checkpoint, RejectsMalformedInput) {
  std::stringstream missing;
  EXPECT_THROW(read_checkpoint(missing), ConfigError);
  std::stringstream bad_json("{not json\n");
  EXPECT_THROW(read_checkpoint(bad_json), ConfigError);

  Checkpoint cp;
  std::stringstream buf;
  write_checkpoint(buf, cp);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_checkpoint(truncated), ConfigError);
  std::stringstream trailing(bytes + "x");
  EXPECT_THROW(read_checkpoint(trailing), ConfigError);
  bytes.back() = 0x02;
  std::stringstream corrupt(bytes);
  EXPECT_THROW(read_checkpoint(corrupt), ConfigError);
}
