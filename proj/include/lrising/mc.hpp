#pragma once

// Markov-chain sampling of exp(-beta H): single-spin Metropolis, annealing,
// replica exchange, field sweeps toward h -> 0+, Peierls droplet
// experiments and the exhaustive check of the conditional flip bound.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lrising/energy.hpp"
#include "lrising/errors.hpp"
#include "lrising/kernel.hpp"
#include "lrising/lattice.hpp"
#include "lrising/random.hpp"
#include "lrising/stats.hpp"
#include "lrising/sums.hpp"

namespace lrising {

/// Runs f(0..n-1) on up to `threads` workers. Results must be written to
/// per-index slots, so the outcome does not depend on the schedule.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
  const int workers = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

enum class StartState { plus, minus, random };

/// One Markov chain: configuration, its local-field cache, its own random
/// stream and a sweep counter. Owned by one worker at a time.
struct ChainState {
  SpinConfig config;
  LocalFieldCache cache;
  Rng rng;
  long long sweep = 0;
  int audit_interval = 0;  ///< re-derive the cache every this many sweeps (0 = never)

  static ChainState start(const EnergyModel& model, std::uint64_t seed, StartState init = StartState::plus) {
    const auto& p = model.params();
    SpinConfig c(p.d, model.side(), model.boundary(), model.exterior(), init == StartState::minus ? -1 : 1);
    Rng rng(seed);
    if (init == StartState::random) {
      for (std::size_t i = 0; i < c.size(); ++i) c.set(i, rng.spin());
    }
    LocalFieldCache cache = model.build_cache(c);
    return ChainState{std::move(c), std::move(cache), rng, 0, 0};
  }
};

/// N^d Metropolis proposals at uniformly random sites; returns the number
/// accepted.
inline long long metropolis_sweep(ChainState& st, const EnergyModel& model) {
  const double beta = model.params().beta;
  const std::size_t n = st.config.size();
  long long accepted = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t site = st.rng.index(n);
    const double de = model.delta_flip(st.config, st.cache, site);
    const double u = st.rng.uniform();
    if (de <= 0.0 || u < std::exp(-beta * de)) {
      model.apply_flip(st.config, st.cache, site);
      ++accepted;
    }
  }
  ++st.sweep;
  if (st.audit_interval > 0 && st.sweep % st.audit_interval == 0) model.audit(st.config, st.cache);
  return accepted;
}

// ---------------------------------------------------------------------------
// Measurements.

struct MeasurementOptions {
  std::vector<int> block_sizes;  ///< half-sides L of the centred blocks Lambda_L
  int t_obs_L = -1;              ///< inner half-side for the interaction observable (-1 = off)
  bool structure = true;
};

struct MeasurementRecord {
  long long sweep = 0;
  double beta = 0.0;
  double h = 0.0;
  EnergyBreakdown energy;
  double m = 0.0;
  double m_abs = 0.0;
  std::vector<double> m_blocks;
  double t_obs = std::numeric_limits<double>::quiet_NaN();
  Site s_peak_k{0, 0, 0};
  double s_peak_value = 0.0;
};

inline MeasurementRecord measure(const ChainState& st, const EnergyModel& model, const MeasurementOptions& opt) {
  MeasurementRecord r;
  r.sweep = st.sweep;
  r.beta = model.params().beta;
  r.h = model.params().h;
  r.energy = model.energy_from_cache(st.config, st.cache);
  r.m = static_cast<double>(st.config.magnetization_sum()) / static_cast<double>(st.config.size());
  r.m_abs = std::abs(r.m);
  for (int L : opt.block_sizes) r.m_blocks.push_back(block_magnetization(st.config, L));
  if (opt.t_obs_L >= 0) r.t_obs = model.interaction_observable(st.config, opt.t_obs_L);
  if (opt.structure) {
    const StructurePeak peak = structure_peak(st.config);
    r.s_peak_k = peak.momentum;
    r.s_peak_value = peak.value;
  }
  return r;
}

struct RunOptions {
  long long thermalization = 1000;
  long long sweeps = 1000;
  int measure_every = 1;
  std::uint64_t seed = 1;
  StartState start = StartState::plus;
  MeasurementOptions measurements;
};

/// Equilibrate, then record one MeasurementRecord every measure_every sweeps.
inline std::vector<MeasurementRecord> run_chain(const EnergyModel& model, const RunOptions& opt) {
  if (opt.measure_every < 1) throw DomainError("measure_every must be >= 1");
  ChainState st = ChainState::start(model, opt.seed, opt.start);
  for (long long k = 0; k < opt.thermalization; ++k) metropolis_sweep(st, model);
  std::vector<MeasurementRecord> out;
  for (long long k = 0; k < opt.sweeps; ++k) {
    metropolis_sweep(st, model);
    if ((k + 1) % opt.measure_every == 0) out.push_back(measure(st, model, opt.measurements));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annealing.

struct AnnealResult {
  SpinConfig best;
  double best_energy = 0.0;
  std::vector<double> stage_energy;  ///< energy at the end of each stage
};

/// Metropolis at each beta of a non-decreasing ladder; keeps the lowest
/// energy configuration seen at the end of any sweep.
inline AnnealResult anneal(ChainState& st, const EnergyModel& model, const std::vector<double>& betas,
                           long long sweeps_per_stage) {
  if (betas.empty()) throw DomainError("anneal: empty schedule");
  for (std::size_t k = 1; k < betas.size(); ++k) {
    if (betas[k] < betas[k - 1]) throw DomainError("anneal: beta schedule must be non-decreasing");
  }
  AnnealResult res{st.config, model.energy_from_cache(st.config, st.cache).total, {}};
  for (double beta : betas) {
    ModelParams q = model.params();
    q.beta = beta;
    const EnergyModel stage = model.with_params(q);
    for (long long k = 0; k < sweeps_per_stage; ++k) {
      metropolis_sweep(st, stage);
      const double e = stage.energy_from_cache(st.config, st.cache).total;
      if (e < res.best_energy - 1e-12) {
        res.best_energy = e;
        res.best = st.config;
      }
    }
    res.stage_energy.push_back(stage.energy_from_cache(st.config, st.cache).total);
  }
  return res;
}

/// Geometric beta ladder from beta_lo to beta_hi.
inline std::vector<double> geometric_schedule(double beta_lo, double beta_hi, int stages) {
  if (stages < 1 || !(beta_lo > 0.0) || !(beta_hi >= beta_lo)) throw DomainError("bad annealing schedule");
  std::vector<double> b(stages);
  for (int k = 0; k < stages; ++k) {
    const double t = stages == 1 ? 1.0 : static_cast<double>(k) / (stages - 1);
    b[k] = beta_lo * std::pow(beta_hi / beta_lo, t);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Replica exchange.

inline double swap_probability(double beta_i, double beta_j, double e_i, double e_j) {
  const double x = (beta_i - beta_j) * (e_i - e_j);
  return x >= 0.0 ? 1.0 : std::exp(x);
}

/// Chains on an increasing beta ladder; chains[k] always samples betas[k].
struct ReplicaLadder {
  std::vector<double> betas;
  std::vector<ChainState> chains;
  std::vector<long long> attempts;  ///< per adjacent pair (k, k+1)
  std::vector<long long> accepts;
  Rng rng;
  long long steps = 0;

  static ReplicaLadder create(const EnergyModel& model, std::vector<double> betas, std::uint64_t seed,
                              StartState init = StartState::random) {
    if (betas.size() < 2) throw DomainError("replica ladder needs at least two temperatures");
    ReplicaLadder r;
    r.betas = std::move(betas);
    for (std::size_t k = 0; k < r.betas.size(); ++k) {
      r.chains.push_back(ChainState::start(model, derive_seed(seed, k), init));
    }
    r.attempts.assign(r.betas.size() - 1, 0);
    r.accepts.assign(r.betas.size() - 1, 0);
    r.rng = Rng(derive_seed(seed, 0xFFFFFFFFULL));
    return r;
  }

  double swap_rate(std::size_t pair) const {
    return attempts[pair] == 0 ? 0.0 : static_cast<double>(accepts[pair]) / attempts[pair];
  }
};

/// One Metropolis sweep per replica (in parallel), then a swap attempt on
/// every other adjacent pair, alternating even and odd pairs between calls.
inline void replica_exchange_step(ReplicaLadder& ladder, const EnergyModel& model, int threads = 1) {
  std::vector<EnergyModel> stages;
  for (double b : ladder.betas) {
    ModelParams q = model.params();
    q.beta = b;
    stages.push_back(model.with_params(q));
  }
  parallel_for(ladder.chains.size(), threads, [&](std::size_t k) { metropolis_sweep(ladder.chains[k], stages[k]); });
  std::vector<double> energy(ladder.chains.size());
  for (std::size_t k = 0; k < ladder.chains.size(); ++k) {
    energy[k] = model.energy_from_cache(ladder.chains[k].config, ladder.chains[k].cache).total;
  }
  for (std::size_t k = static_cast<std::size_t>(ladder.steps % 2); k + 1 < ladder.chains.size(); k += 2) {
    ++ladder.attempts[k];
    const double p = swap_probability(ladder.betas[k], ladder.betas[k + 1], energy[k], energy[k + 1]);
    if (ladder.rng.uniform() < p) {
      ++ladder.accepts[k];
      std::swap(ladder.chains[k].config, ladder.chains[k + 1].config);
      std::swap(ladder.chains[k].cache, ladder.chains[k + 1].cache);
      std::swap(energy[k], energy[k + 1]);
    }
  }
  ++ladder.steps;
}

// ---------------------------------------------------------------------------
// Field sweep.

struct FieldSweepOptions {
  std::vector<double> h_grid;  ///< non-negative, strictly decreasing
  std::vector<int> sides;      ///< torus sides N
  long long thermalization = 1000;
  long long sweeps = 4000;
  std::uint64_t seed = 1;
  int threads = 1;
  int bins = kMinJackknifeBins;
  StartState start = StartState::plus;
};

struct FieldPoint {
  double h = 0.0;
  double m_mean = 0.0;
  double m_err = 0.0;
  double m_abs_mean = 0.0;
  double m_abs_err = 0.0;
  bool equilibrated = true;
};

struct FieldSweepResult {
  int side = 0;
  std::vector<FieldPoint> points;
  double intercept = 0.0;
  double intercept_err = 0.0;
  bool all_equilibrated = true;
};

/// Weighted linear fit m = m0 + c h over the three smallest fields;
/// returns (m0, standard error of m0).
inline std::pair<double, double> extrapolate_to_zero_field(const std::vector<FieldPoint>& pts) {
  if (pts.size() < 3) throw DomainError("field sweep needs at least three fields to extrapolate");
  std::vector<FieldPoint> low(pts.end() - 3, pts.end());
  double floor_err = 0.0;
  for (const auto& q : low) floor_err = std::max(floor_err, q.m_err);
  floor_err = std::max(floor_err * 1e-3, 1e-12);
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& q : low) {
    const double w = 1.0 / std::pow(std::max(q.m_err, floor_err), 2);
    sw += w;
    sx += w * q.h;
    sy += w * q.m_mean;
    sxx += w * q.h * q.h;
    sxy += w * q.h * q.m_mean;
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw DomainError("field sweep: degenerate h grid");
  const double m0 = (sxx * sy - sx * sxy) / det;
  return {m0, std::sqrt(sxx / det)};
}

inline std::vector<FieldSweepResult> field_sweep(const ModelParams& p, const FieldSweepOptions& opt) {
  p.validate(true);
  if (opt.h_grid.empty() || opt.sides.empty()) throw DomainError("field sweep needs h and side grids");
  for (std::size_t k = 0; k < opt.h_grid.size(); ++k) {
    if (!(opt.h_grid[k] >= 0.0)) throw DomainError("field sweep: h must be >= 0");
    if (k > 0 && !(opt.h_grid[k] < opt.h_grid[k - 1])) throw DomainError("field sweep: h grid must decrease");
  }
  if (opt.sweeps < 2 * opt.bins) throw DomainError("field sweep: too few sweeps for the jackknife");
  const std::size_t nh = opt.h_grid.size();
  const std::size_t jobs = nh * opt.sides.size();
  std::vector<EnergyModel> models;
  for (int N : opt.sides) models.emplace_back(p, N, Boundary::torus);
  std::vector<FieldPoint> points(jobs);
  parallel_for(jobs, opt.threads, [&](std::size_t job) {
    const std::size_t si = job / nh;
    const std::size_t hi = job % nh;
    ModelParams q = p;
    q.h = opt.h_grid[hi];
    const EnergyModel model = models[si].with_params(q);
    ChainState st = ChainState::start(model, derive_seed(opt.seed, job), opt.start);
    for (long long k = 0; k < opt.thermalization; ++k) metropolis_sweep(st, model);
    std::vector<double> m(opt.sweeps);
    std::vector<double> mabs(opt.sweeps);
    for (long long k = 0; k < opt.sweeps; ++k) {
      metropolis_sweep(st, model);
      m[k] = static_cast<double>(st.config.magnetization_sum()) / static_cast<double>(st.config.size());
      mabs[k] = std::abs(m[k]);
    }
    FieldPoint fp;
    fp.h = q.h;
    const Estimate em = jackknife(m, opt.bins);
    const Estimate ea = jackknife(mabs, opt.bins);
    fp.m_mean = em.mean;
    fp.m_err = em.error;
    fp.m_abs_mean = ea.mean;
    fp.m_abs_err = ea.error;
    fp.equilibrated = !halves_disagree(m);
    points[job] = fp;
  });
  std::vector<FieldSweepResult> out;
  for (std::size_t si = 0; si < opt.sides.size(); ++si) {
    FieldSweepResult r;
    r.side = opt.sides[si];
    r.points.assign(points.begin() + si * nh, points.begin() + (si + 1) * nh);
    for (const auto& q : r.points) r.all_equilibrated = r.all_equilibrated && q.equilibrated;
    if (nh >= 3) {
      const auto [m0, err] = extrapolate_to_zero_field(r.points);
      r.intercept = std::clamp(m0, 0.0, 1.0);
      r.intercept_err = err;
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Droplets.

enum class GrowthPolicy {
  random,  ///< add a uniformly chosen perimeter site at each step
  box,     ///< the centred box Lambda_ell; size must be (2 ell + 1)^d
};

/// Connected lattice animal containing the origin with exactly `size` sites,
/// grown inside Lambda_{box_L}. Not uniform over animals: the random policy
/// favours compact shapes.
inline Region droplet_sample(int d, int box_L, std::size_t size, std::uint64_t seed,
                             GrowthPolicy policy = GrowthPolicy::random) {
  check_dimension(d);
  if (size < 1) throw DomainError("droplet size must be positive");
  if (box_L < 0 || static_cast<long long>(size) > box_volume(d, box_L)) {
    throw DomainError("droplet does not fit in the growth box");
  }
  if (policy == GrowthPolicy::box) {
    const int ell = static_cast<int>(std::lround((std::pow(static_cast<double>(size), 1.0 / d) - 1.0) / 2.0));
    if (box_volume(d, ell) != static_cast<long long>(size) || ell > box_L) {
      throw DomainError("box growth needs size = (2 ell + 1)^d within the growth box");
    }
    return box_region(d, ell);
  }
  Rng rng(seed);
  Region r{d, {Site{0, 0, 0}}};
  std::unordered_set<Site, SiteHash> in{Site{0, 0, 0}};
  std::vector<Site> perimeter;
  std::unordered_set<Site, SiteHash> on_perimeter;
  const auto steps = unit_steps(d);
  auto add_neighbours = [&](const Site& x) {
    for (const auto& e : steps) {
      const Site y = x + e;
      bool inside_box = true;
      for (int k = 0; k < d; ++k) inside_box = inside_box && std::abs(y[k]) <= box_L;
      if (inside_box && !in.count(y) && on_perimeter.insert(y).second) perimeter.push_back(y);
    }
  };
  add_neighbours(r.sites.front());
  while (r.sites.size() < size) {
    const std::size_t pick = rng.index(perimeter.size());
    const Site x = perimeter[pick];
    perimeter[pick] = perimeter.back();
    perimeter.pop_back();
    on_perimeter.erase(x);
    in.insert(x);
    r.sites.push_back(x);
    add_neighbours(x);
  }
  return r;
}

struct PeierlsRow {
  std::size_t size = 0;
  long long boundary = 0;      ///< |dR|
  double crossing = 0.0;       ///< sum_{i in R, j notin R} K_ij (lower end)
  double crossing_tail = 0.0;
  double ratio = 0.0;          ///< crossing / |dR|
  double delta_e = 0.0;        ///< flip cost on the all-plus background
  double identity_gap = 0.0;   ///< |delta_e - (2J|dR| - 2 crossing)|
};

struct PeierlsReport {
  std::vector<PeierlsRow> rows;
  double j0_hat = 0.0;          ///< max ratio: empirical threshold coupling
  double max_identity_gap = 0.0;
};

/// Droplets on an all-plus background (h = 0): records the crossing sum per
/// boundary bond and checks the flip cost against 2J|dR| - 2 sum K.
inline PeierlsReport peierls_experiment(const ModelParams& p, const std::vector<std::size_t>& sizes,
                                        int samples_per_size, std::uint64_t seed,
                                        GrowthPolicy policy = GrowthPolicy::random, double tol = 1e-9,
                                        int threads = 1) {
  p.validate(true);
  if (samples_per_size < 1) throw DomainError("need at least one sample per size");
  ModelParams q = p;
  q.h = 0.0;
  struct Job {
    std::size_t size;
    int sample;
  };
  std::vector<Job> jobs;
  for (std::size_t sz : sizes) {
    for (int k = 0; k < (policy == GrowthPolicy::box ? 1 : samples_per_size); ++k) jobs.push_back({sz, k});
  }
  std::vector<PeierlsRow> rows(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t job) {
    const std::size_t sz = jobs[job].size;
    const int grow_box = static_cast<int>(sz);
    const Region r = droplet_sample(q.d, grow_box, sz, derive_seed(seed, job), policy);
    PeierlsRow row;
    row.size = sz;
    row.boundary = boundary_bond_count(r);
    const TailBound cross = crossing_sum(r, q, std::max(tol, 1e-11 * static_cast<double>(sz)));
    row.crossing = cross.value;
    row.crossing_tail = cross.tail;
    row.ratio = cross.value / static_cast<double>(row.boundary);
    // Embed in a box with a one-site margin under a +1 exterior.
    const Extent e = extent(r);
    int side = 0;
    for (int k = 0; k < q.d; ++k) side = std::max(side, e.hi[k] - e.lo[k] + 3);
    side = std::max(side, 3);
    Region shifted{q.d, {}};
    for (const auto& x : r.sites) {
      Site y = x;
      for (int k = 0; k < q.d; ++k) y[k] = x[k] - e.lo[k] + 1;
      shifted.sites.push_back(y);
    }
    const EnergyModel model(q, side, Boundary::fixed_exterior, Exterior::plus);
    const SpinConfig c(q.d, side, Boundary::fixed_exterior, Exterior::plus, 1);
    const LocalFieldCache cache = model.build_cache(c);
    row.delta_e = model.droplet_flip_delta(c, cache, shifted);
    row.identity_gap =
        std::abs(row.delta_e - (2.0 * q.J * row.boundary - 2.0 * cross.midpoint()));
    rows[job] = row;
  });
  PeierlsReport rep;
  rep.rows = std::move(rows);
  for (const auto& row : rep.rows) {
    rep.j0_hat = std::max(rep.j0_hat, row.ratio);
    rep.max_identity_gap = std::max(rep.max_identity_gap, row.identity_gap);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Exhaustive conditional check.

/// Spins outside Lambda_L: an explicit window Lambda_R (entries inside
/// Lambda_L ignored) and a uniform background beyond it. An empty window
/// means the exterior is uniformly `background`.
struct ExteriorCondition {
  std::string name = "uniform_plus";
  int background = 1;
  int window_R = 0;
  std::vector<std::int8_t> window;  ///< row-major on [-R, R]^d

  static ExteriorCondition uniform(int b) {
    ExteriorCondition e;
    e.name = b > 0 ? "uniform_plus" : "uniform_minus";
    e.background = b;
    return e;
  }

  /// Independent fair spins on Lambda_R with a uniform background beyond.
  static ExteriorCondition random_window(int d, int R, std::uint64_t seed, int background = 1) {
    ExteriorCondition e;
    e.name = "random_window";
    e.background = background;
    e.window_R = R;
    Rng rng(seed);
    e.window.resize(static_cast<std::size_t>(box_volume(d, R)));
    for (auto& v : e.window) v = static_cast<std::int8_t>(rng.spin());
    return e;
  }

  int spin_at(int d, const Site& x) const {
    if (window.empty()) return background;
    const Grid g(d, 2 * window_R + 1);
    Site y = x;
    for (int k = 0; k < d; ++k) {
      if (std::abs(x[k]) > window_R) return background;
      y[k] = x[k] + window_R;
    }
    return window[g.index(y)];
  }
};

struct ExactCheckRow {
  std::string exterior;
  double beta = 0.0;
  double fraction = 0.0;       ///< the event is T_L(s) >= fraction * T_L
  double t_l = 0.0;
  double probability = 0.0;    ///< conditional probability of the event
  double probability_upper = 0.0;  ///< with the eps_s tail folded in
  double bound = 0.0;          ///< exp(-2 beta (fraction T_L - |J| |dLambda_L|))
  double log_margin = 0.0;     ///< log(bound) - log(probability_upper)
  bool holds = false;
};

inline constexpr int kMaxEnumeratedSpins = 20;

/// Enumerates every interior configuration of Lambda_L under a fixed exterior
/// and checks P(T_L(s) >= f T_L | exterior) <= exp(-2 beta (f T_L - |J||dLambda_L|))
/// with the exact boundary bond count. Requires h = 0.
inline std::vector<ExactCheckRow> exact_conditional_check(const ModelParams& p, int L,
                                                          const std::vector<ExteriorCondition>& exteriors,
                                                          const std::vector<double>& betas,
                                                          const std::vector<double>& fractions) {
  p.validate(true);
  if (p.h != 0.0) throw DomainError("exact_conditional_check requires h = 0");
  if (L < 0) throw DomainError("inner box half-side must be >= 0");
  const long long V = box_volume(p.d, L);
  if (V > kMaxEnumeratedSpins) {
    throw EnumerationCapExceeded("exact_conditional_check: 2^" + std::to_string(V) + " configurations exceed the cap");
  }
  for (double b : betas) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw DomainError("beta must be finite and >= 0");
  }
  const int d = p.d;
  const Region box = box_region(d, L);
  const std::size_t n = box.size();
  const TailBound eps = unit_single_site_sum(d, p.s, detail::epsilon_tolerance_floor(d));
  const TailBound t_l = t_sum(BoxSpec{d, L, {}}, p, 1e-6);
  const long long bonds = box_boundary_bonds(d, L);
  const auto steps = unit_steps(d);
  auto in_box = [&](const Site& x) {
    for (int k = 0; k < d; ++k) {
      if (std::abs(x[k]) > L) return false;
    }
    return true;
  };

  std::vector<ExactCheckRow> rows;
  for (const auto& ext : exteriors) {
    if (!ext.window.empty()) {
      if (ext.window_R <= L) throw DomainError("exterior window must extend beyond Lambda_L");
      if (static_cast<long long>(ext.window.size()) != box_volume(d, ext.window_R)) {
        throw DomainError("exterior window has wrong size");
      }
    }
    // Unit-amplitude exterior field psi_i = sum_{j notin Lambda_L} K_ij s_j.
    std::vector<double> psi(n, 0.0);
    std::vector<int> ext_nn(n, 0);
    const int R = ext.window.empty() ? L : ext.window_R;
    const Region win = box_region(d, R);
    for (std::size_t a = 0; a < n; ++a) {
      const Site& i = box.sites[a];
      long double explicit_part = 0.0L;
      long double window_total = 0.0L;
      for (const auto& j : win.sites) {
        const long long r2 = squared_distance(d, i, j);
        if (r2 == 0) continue;
        const double k = inverse_power_r2(r2, p.s);
        window_total += k;
        if (!in_box(j)) explicit_part += k * ext.spin_at(d, j);
      }
      psi[a] = static_cast<double>(explicit_part +
                                   ext.background * (static_cast<long double>(eps.midpoint()) - window_total));
      for (const auto& e : steps) {
        const Site y = i + e;
        if (!in_box(y)) ext_nn[a] += ext.spin_at(d, y);
      }
    }
    // Slack covering the eps_s tail and rounding in T_L(s) and H.
    const double slack = p.kappa * static_cast<double>(n) * (0.5 * eps.tail + 1e-12 * eps.upper());

    // Per-configuration energy and observable.
    const std::size_t states = std::size_t{1} << n;
    std::vector<double> energy(states);
    std::vector<double> obs(states);
    std::vector<int> sigma(n);
    for (std::size_t mask = 0; mask < states; ++mask) {
      for (std::size_t a = 0; a < n; ++a) sigma[a] = (mask >> a) & 1 ? -1 : 1;
      long double ferro = 0.0L;
      long double lr = 0.0L;
      long double t = 0.0L;
      for (std::size_t a = 0; a < n; ++a) {
        ferro += sigma[a] * ext_nn[a];
        t += sigma[a] * psi[a];
        for (std::size_t b = a + 1; b < n; ++b) {
          const long long r2 = squared_distance(d, box.sites[a], box.sites[b]);
          if (r2 == 1) ferro += sigma[a] * sigma[b];
          lr += inverse_power_r2(r2, p.s) * sigma[a] * sigma[b];
        }
      }
      obs[mask] = p.kappa * static_cast<double>(t);
      energy[mask] = static_cast<double>(-p.J * ferro + p.kappa * (lr + t));
    }
    const double e_min = *std::min_element(energy.begin(), energy.end());

    for (double beta : betas) {
      std::vector<double> w(states);
      long double z = 0.0L;
      for (std::size_t mask = 0; mask < states; ++mask) {
        w[mask] = std::exp(-beta * (energy[mask] - e_min));
        z += w[mask];
      }
      for (double f : fractions) {
        const double threshold = f * t_l.value;
        long double hit = 0.0L;
        long double hit_relaxed = 0.0L;
        for (std::size_t mask = 0; mask < states; ++mask) {
          if (obs[mask] >= threshold) hit += w[mask];
          if (obs[mask] >= threshold - slack) hit_relaxed += w[mask];
        }
        ExactCheckRow row;
        row.exterior = ext.name;
        row.beta = beta;
        row.fraction = f;
        row.t_l = t_l.value;
        row.probability = static_cast<double>(hit / z);
        row.probability_upper = std::exp(2.0 * beta * slack) * static_cast<double>(hit_relaxed / z);
        row.bound = std::exp(-2.0 * beta * (f * t_l.upper() - std::abs(p.J) * static_cast<double>(bonds)));
        row.log_margin = row.probability_upper > 0.0
                             ? std::log(row.bound) - std::log(row.probability_upper)
                             : std::numeric_limits<double>::infinity();
        row.holds = row.probability_upper <= row.bound;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Interaction observable scan.

struct TObservableRow {
  int L = 0;
  int side = 0;
  double ratio = 0.0;  ///< <T_L(s)> / T_L(+), unit amplitude, same finite window
  double ratio_err = 0.0;
  double m_abs = 0.0;
  double m2 = 0.0;
  bool equilibrated = true;
};

struct TObservableOptions {
  std::vector<int> Ls;
  int side = 32;
  long long thermalization = 1000;
  long long sweeps = 2000;
  std::uint64_t seed = 1;
  StartState start = StartState::plus;
  int bins = kMinJackknifeBins;
};

/// Equilibrated torus chain; for each L the interaction observable is
/// normalized by its all-plus value on the same window, so a frozen
/// uniform state gives exactly 1.
inline std::vector<TObservableRow> t_observable_scan(const ModelParams& p, const TObservableOptions& opt) {
  p.validate(true);
  if (opt.Ls.empty()) throw DomainError("t_observable_scan needs an L grid");
  const EnergyModel model(p, opt.side, Boundary::torus);
  std::vector<double> norm;
  const SpinConfig plus(p.d, opt.side, Boundary::torus);
  for (int L : opt.Ls) norm.push_back(model.interaction_observable(plus, L, true));
  ChainState st = ChainState::start(model, opt.seed, opt.start);
  for (long long k = 0; k < opt.thermalization; ++k) metropolis_sweep(st, model);
  std::vector<std::vector<double>> series(opt.Ls.size(), std::vector<double>(opt.sweeps));
  std::vector<double> mabs(opt.sweeps);
  std::vector<double> m2(opt.sweeps);
  for (long long k = 0; k < opt.sweeps; ++k) {
    metropolis_sweep(st, model);
    for (std::size_t a = 0; a < opt.Ls.size(); ++a) {
      series[a][k] = model.interaction_observable(st.config, opt.Ls[a], true) / norm[a];
    }
    const double m = static_cast<double>(st.config.magnetization_sum()) / static_cast<double>(st.config.size());
    mabs[k] = std::abs(m);
    m2[k] = m * m;
  }
  std::vector<TObservableRow> rows;
  for (std::size_t a = 0; a < opt.Ls.size(); ++a) {
    TObservableRow r;
    r.L = opt.Ls[a];
    r.side = opt.side;
    const Estimate e = jackknife(series[a], opt.bins);
    r.ratio = e.mean;
    r.ratio_err = e.error;
    r.m_abs = jackknife(mabs, opt.bins).mean;
    r.m2 = jackknife(m2, opt.bins).mean;
    r.equilibrated = !halves_disagree(series[a]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lrising
