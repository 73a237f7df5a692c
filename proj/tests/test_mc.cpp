#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "lrising/errors.hpp"
#include "lrising/mc.hpp"
#include "lrising/random.hpp"
#include "lrising/stats.hpp"

using namespace lrising;

namespace {

ModelParams params(int d, double s, double J, double kappa, double h = 0.0, double beta = 1.0) {
  ModelParams p;
  p.d = d;
  p.s = s;
  p.J = J;
  p.kappa = kappa;
  p.h = h;
  p.beta = beta;
  return p;
}

}  // namespace

TEST(Rng, SameSeedSameStream) {
  Rng a(77), b(77), c(78);
  for (int k = 0; k < 100; ++k) {
    const auto x = a.bits();
    EXPECT_EQ(x, b.bits());
    (void)c.bits();
  }
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
}

TEST(Rng, IndexIsUniformAndInRange) {
  Rng rng(1);
  const std::size_t n = 7;
  std::vector<long long> count(n, 0);
  const long long draws = 700000;
  for (long long k = 0; k < draws; ++k) {
    const std::size_t i = rng.index(n);
    ASSERT_LT(i, n);
    ++count[i];
  }
  const double expect = static_cast<double>(draws) / n;
  const double sigma = std::sqrt(expect * (1.0 - 1.0 / n));
  for (long long c : count) EXPECT_LT(std::abs(c - expect), 5.0 * sigma);
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(2);
  double sum = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(DeriveSeed, DistinctAcrossIndicesAndMasters) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t m = 0; m < 20; ++m) {
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(m, i));
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Jackknife, IidSeriesErrorMatchesStandardError) {
  Rng rng(3);
  std::vector<double> x(64000);
  for (auto& v : x) v = rng.uniform();
  const Estimate e = jackknife(x, 32);
  EXPECT_NEAR(e.mean, 0.5, 0.005);
  const double se = std::sqrt(1.0 / 12.0 / x.size());
  EXPECT_NEAR(e.error / se, 1.0, 0.35);
}

TEST(Jackknife, RequiresSixteenBins) {
  EXPECT_THROW(jackknife(std::vector<double>(100, 1.0), 8), DomainError);
  EXPECT_THROW(jackknife(std::vector<double>(10, 1.0), 16), DomainError);
  const Estimate e = jackknife(std::vector<double>(160, 2.0), 16);
  EXPECT_DOUBLE_EQ(e.mean, 2.0);
  EXPECT_DOUBLE_EQ(e.error, 0.0);
}

TEST(HalvesDisagree, FlagsADriftingSeries) {
  Rng rng(4);
  std::vector<double> flat(4000), drift(4000);
  for (std::size_t k = 0; k < flat.size(); ++k) {
    flat[k] = rng.uniform();
    drift[k] = rng.uniform() + (k < 2000 ? 0.0 : 0.3);
  }
  EXPECT_FALSE(halves_disagree(flat));
  EXPECT_TRUE(halves_disagree(drift));
}

TEST(Metropolis, FlipsEverySiteAtInfiniteTemperature) {
  const EnergyModel model(params(2, 3.0, 1.0, 1.0, 0.0, 0.0), 6, Boundary::torus);
  ChainState st = ChainState::start(model, 9);
  EXPECT_EQ(metropolis_sweep(st, model), 36);
  EXPECT_EQ(st.sweep, 1);
}

TEST(Metropolis, CacheStaysConsistent) {
  const EnergyModel model(params(2, 2.8, 1.0, 0.6, 0.2, 0.8), 8, Boundary::fixed_exterior, Exterior::minus);
  ChainState st = ChainState::start(model, 10, StartState::random);
  st.audit_interval = 5;
  for (int k = 0; k < 50; ++k) metropolis_sweep(st, model);
  EXPECT_NO_THROW(model.audit(st.config, st.cache));
}

TEST(Metropolis, BitIdenticalMeasurementStreams) {
  const EnergyModel model(params(2, 3.0, 1.0, 0.5, 0.1, 0.7), 8, Boundary::torus);
  RunOptions opt;
  opt.thermalization = 20;
  opt.sweeps = 50;
  opt.seed = 123;
  opt.start = StartState::random;
  opt.measurements.block_sizes = {1, 2};
  opt.measurements.t_obs_L = 1;
  const auto a = run_chain(model, opt);
  const auto b = run_chain(model, opt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].energy.total, b[k].energy.total);
    EXPECT_EQ(a[k].m, b[k].m);
    EXPECT_EQ(a[k].m_blocks, b[k].m_blocks);
    EXPECT_EQ(a[k].t_obs, b[k].t_obs);
  }
}

// Exhaustive Boltzmann weights of a 3-site ring against visit frequencies.
TEST(Metropolis, SamplesTheBoltzmannDistribution) {
  const ModelParams p = params(1, 2.0, 0.7, 0.9, 0.2, 0.9);
  const EnergyModel model(p, 3, Boundary::torus);
  std::vector<double> w(8);
  double z = 0.0;
  for (int code = 0; code < 8; ++code) {
    SpinConfig c(1, 3);
    for (int i = 0; i < 3; ++i) c.set(i, (code >> i) & 1 ? 1 : -1);
    w[code] = std::exp(-p.beta * model.total_energy_direct(c).total);
    z += w[code];
  }
  ChainState st = ChainState::start(model, 11, StartState::random);
  std::vector<double> count(8, 0.0);
  const int sweeps = 400000;
  for (int k = 0; k < sweeps; ++k) {
    metropolis_sweep(st, model);
    int code = 0;
    for (int i = 0; i < 3; ++i) code |= (st.config[i] > 0) << i;
    count[code] += 1.0;
  }
  for (int c = 0; c < 8; ++c) EXPECT_NEAR(count[c] / sweeps, w[c] / z, 0.01) << "state " << c;
}

TEST(Metropolis, GlobalFlipSymmetryAtZeroField) {
  const EnergyModel model(params(1, 2.0, 0.5, 0.3, 0.0, 0.5), 6, Boundary::torus);
  ChainState st = ChainState::start(model, 12, StartState::random);
  std::map<long long, double> hist;
  const int sweeps = 200000;
  for (int k = 0; k < sweeps; ++k) {
    metropolis_sweep(st, model);
    hist[st.config.magnetization_sum()] += 1.0;
  }
  for (long long m = 2; m <= 6; m += 2) {
    const double a = hist[m], b = hist[-m];
    // 3 sigma, widened by a generous autocorrelation factor.
    EXPECT_LT(std::abs(a - b), 3.0 * 4.0 * std::sqrt(a + b)) << "m=" << m;
  }
}

TEST(Anneal, FindsTheExactGroundState) {
  const ModelParams p = params(2, 3.0, 1.0, 1.2, 0.0, 1.0);
  const EnergyModel model(p, 4, Boundary::torus);
  double e_min = INFINITY;
  for (std::size_t mask = 0; mask < (1u << 16); ++mask) {
    SpinConfig c(2, 4);
    for (std::size_t i = 0; i < 16; ++i) {
      if ((mask >> i) & 1) c.set(i, -1);
    }
    e_min = std::min(e_min, model.total_energy_direct(c).total);
  }
  ChainState st = ChainState::start(model, 13, StartState::random);
  const AnnealResult res = anneal(st, model, geometric_schedule(0.1, 8.0, 25), 200);
  EXPECT_NEAR(res.best_energy, e_min, 1e-9);
  EXPECT_NEAR(model.total_energy_direct(res.best).total, res.best_energy, 1e-9);
  EXPECT_EQ(res.stage_energy.size(), 25u);
}

TEST(Anneal, UnfrustratedFerromagnetOrders) {
  const EnergyModel model(params(2, 3.0, 1.0, 0.0), 16, Boundary::torus);
  ChainState st = ChainState::start(model, 14, StartState::random);
  const AnnealResult res = anneal(st, model, geometric_schedule(0.2, 5.0, 20), 400);
  EXPECT_EQ(std::abs(res.best.magnetization_sum()), 256);
  EXPECT_DOUBLE_EQ(res.best_energy, -512.0);
}

// Pure long-range antiferromagnet on a 16-ring: the alternating state is optimal.
TEST(Anneal, AlternatingStateIsTheRingGroundState) {
  const EnergyModel model(params(1, 2.0, 0.0, 1.0), 16, Boundary::torus);
  double e_min = INFINITY;
  for (std::size_t mask = 0; mask < (1u << 16); ++mask) {
    SpinConfig c(1, 16);
    for (std::size_t i = 0; i < 16; ++i) {
      if ((mask >> i) & 1) c.set(i, -1);
    }
    e_min = std::min(e_min, model.total_energy_fast(c).total);
  }
  SpinConfig alt(1, 16);
  for (std::size_t i = 1; i < 16; i += 2) alt.set(i, -1);
  EXPECT_NEAR(model.total_energy_direct(alt).total, e_min, 1e-9);
  ChainState st = ChainState::start(model, 15, StartState::random);
  EXPECT_NEAR(anneal(st, model, geometric_schedule(0.2, 10.0, 20), 200).best_energy, e_min, 1e-9);
}

TEST(Anneal, RejectsDecreasingSchedule) {
  const EnergyModel model(params(1, 2.0, 1.0, 1.0), 4, Boundary::torus);
  ChainState st = ChainState::start(model, 1);
  EXPECT_THROW(anneal(st, model, {1.0, 0.5}, 10), DomainError);
  EXPECT_THROW(geometric_schedule(0.0, 1.0, 5), DomainError);
}

TEST(ReplicaExchange, SwapAcceptanceRule) {
  EXPECT_DOUBLE_EQ(swap_probability(1.0, 2.0, -1.0, -3.0), std::exp(-2.0));
  EXPECT_DOUBLE_EQ(swap_probability(1.0, 2.0, -3.0, -1.0), 1.0);
}

TEST(ReplicaExchange, IndependentOfThreadCount) {
  const EnergyModel model(params(2, 3.0, 1.0, 0.8), 6, Boundary::torus);
  ReplicaLadder a = ReplicaLadder::create(model, {0.3, 0.5, 0.8, 1.2}, 21);
  ReplicaLadder b = ReplicaLadder::create(model, {0.3, 0.5, 0.8, 1.2}, 21);
  for (int k = 0; k < 30; ++k) {
    replica_exchange_step(a, model, 1);
    replica_exchange_step(b, model, 3);
  }
  for (std::size_t k = 0; k < a.chains.size(); ++k) EXPECT_EQ(a.chains[k].config.spins(), b.chains[k].config.spins());
  EXPECT_EQ(a.accepts, b.accepts);
  EXPECT_GT(a.swap_rate(0), 0.0);
}

TEST(FieldSweep, FreeSpinsFollowTanh) {
  FieldSweepOptions opt;
  opt.h_grid = {0.8, 0.4, 0.2, 0.1};
  opt.sides = {6};
  opt.thermalization = 50;
  opt.sweeps = 3200;
  opt.seed = 31;
  const ModelParams p = params(2, 3.0, 0.0, 0.0, 0.0, 1.3);
  const auto res = field_sweep(p, opt);
  ASSERT_EQ(res.size(), 1u);
  for (const auto& pt : res[0].points) {
    EXPECT_LT(std::abs(pt.m_mean - std::tanh(p.beta * pt.h)), 3.0 * pt.m_err + 1e-12) << "h=" << pt.h;
  }
}

TEST(FieldSweep, DeterministicAcrossThreadCounts) {
  FieldSweepOptions opt;
  opt.h_grid = {0.3, 0.2, 0.1};
  opt.sides = {4, 6};
  opt.thermalization = 20;
  opt.sweeps = 64;
  opt.seed = 5;
  const ModelParams p = params(2, 3.0, 1.0, 0.5, 0.0, 0.6);
  opt.threads = 1;
  const auto a = field_sweep(p, opt);
  opt.threads = 4;
  const auto b = field_sweep(p, opt);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].intercept, b[k].intercept);
    for (std::size_t q = 0; q < a[k].points.size(); ++q) EXPECT_EQ(a[k].points[q].m_mean, b[k].points[q].m_mean);
  }
}

TEST(FieldSweep, ExtrapolatesLinearData) {
  std::vector<FieldPoint> pts;
  for (double h : {0.4, 0.3, 0.2, 0.1}) pts.push_back(FieldPoint{h, 0.25 + 0.5 * h, 0.01, 0, 0, true});
  const auto [m0, err] = extrapolate_to_zero_field(pts);
  EXPECT_NEAR(m0, 0.25, 1e-12);
  EXPECT_GT(err, 0.0);
}

TEST(FieldSweep, ValidatesGrid) {
  FieldSweepOptions opt;
  opt.h_grid = {0.1, 0.2};
  opt.sides = {4};
  EXPECT_THROW(field_sweep(params(1, 2.0, 1.0, 1.0), opt), DomainError);
}

TEST(Droplets, ConnectedWithRequestedSize) {
  for (int d = 1; d <= 3; ++d) {
    for (std::size_t sz : {1u, 5u, 17u}) {
      const Region r = droplet_sample(d, 20, sz, derive_seed(40, sz), GrowthPolicy::random);
      EXPECT_EQ(r.size(), sz);
      EXPECT_TRUE(is_connected(r));
    }
  }
  EXPECT_EQ(droplet_sample(2, 10, 25, 1, GrowthPolicy::box).size(), 25u);
  EXPECT_THROW(droplet_sample(2, 10, 24, 1, GrowthPolicy::box), DomainError);
}

TEST(Peierls, IdentityHoldsAndRatioBounded) {
  const ModelParams p = params(2, 3.5, 1.0, 1.0);
  const PeierlsReport rep = peierls_experiment(p, {1, 4, 9, 20}, 3, 77);
  EXPECT_EQ(rep.rows.size(), 12u);
  EXPECT_LT(rep.max_identity_gap, 1e-9);
  EXPECT_LE(rep.j0_hat, surface_ratio_bound(p));
  for (const auto& row : rep.rows) EXPECT_GE(row.boundary, 2 * p.d);
}

TEST(ExactCheck, BoundHoldsOnSmallBoxes) {
  for (int d = 1; d <= 2; ++d) {
    const ModelParams p = params(d, d + 1.0, 1.0, 1.0);
    const std::vector<ExteriorCondition> ext = {ExteriorCondition::uniform(1), ExteriorCondition::uniform(-1),
                                                ExteriorCondition::random_window(d, 8, 3)};
    for (const auto& row : exact_conditional_check(p, 1, ext, {0.0, 0.5, 1.0, 2.0}, {0.25, 0.5, 0.75, 2.0})) {
      EXPECT_TRUE(row.holds) << row.exterior << " beta=" << row.beta << " f=" << row.fraction;
      EXPECT_LE(row.probability, row.probability_upper);
    }
  }
}

// Beyond the largest attainable value the event is empty.
TEST(ExactCheck, ImpossibleEventHasZeroProbability) {
  const auto rows = exact_conditional_check(params(1, 2.0, 1.0, 1.0), 1, {ExteriorCondition::uniform(1)}, {1.0}, {5.0});
  EXPECT_EQ(rows.at(0).probability, 0.0);
}

// At beta = 0 every interior state is equally likely: count them.
TEST(ExactCheck, InfiniteTemperatureIsACount) {
  const ModelParams p = params(1, 2.0, 1.0, 1.0);
  const auto rows = exact_conditional_check(p, 1, {ExteriorCondition::uniform(1)}, {0.0}, {0.0});
  // T_L(s) >= 0 under a + exterior: all-plus gives T_L > 0, all-minus -T_L < 0.
  const double prob = rows.at(0).probability;
  EXPECT_GT(prob, 0.0);
  EXPECT_LT(prob, 1.0);
  EXPECT_DOUBLE_EQ(prob * 8.0, std::round(prob * 8.0));
}

TEST(ExactCheck, EnforcesCapAndZeroField) {
  EXPECT_THROW(exact_conditional_check(params(2, 3.0, 1.0, 1.0), 2, {ExteriorCondition::uniform(1)}, {1.0}, {0.5}),
               EnumerationCapExceeded);
  EXPECT_THROW(
      exact_conditional_check(params(1, 2.0, 1.0, 1.0, 0.1), 1, {ExteriorCondition::uniform(1)}, {1.0}, {0.5}),
      DomainError);
}

TEST(TObservable, FrozenPlusStateGivesOne) {
  TObservableOptions opt;
  opt.Ls = {0, 1, 2};
  opt.side = 12;
  opt.thermalization = 0;
  opt.sweeps = 32;
  // kappa = 0 and a huge beta with a strong field: nothing ever flips.
  const auto rows = t_observable_scan(params(2, 3.0, 2.0, 0.0, 1.0, 50.0), opt);
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.ratio, 1.0);
}

TEST(TObservable, NearZeroForIndependentSpins) {
  TObservableOptions opt;
  opt.Ls = {1, 2};
  opt.side = 12;
  opt.thermalization = 10;
  opt.sweeps = 1600;
  const auto rows = t_observable_scan(params(2, 3.0, 1.0, 1.0, 0.0, 0.0), opt);
  for (const auto& r : rows) EXPECT_LT(std::abs(r.ratio), 4.0 * r.ratio_err + 1e-3) << "L=" << r.L;
}
