#pragma once

// Monte Carlo experiments for the focus (innermost) cell.
//
// A run has two phases. simulate() draws trials and keeps, for every BS that
// can serve a focus-cell user, the squared matched-filter norms of those users
// and the empirical tau^2. evaluate() turns the cache into decisions for a
// cooperation size, quantizer and threshold policy, so sweeps over B_bn, Q or
// zeta reuse one simulation.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mcad/amp.hpp"
#include "mcad/config.hpp"
#include "mcad/detection.hpp"
#include "mcad/geometry.hpp"
#include "mcad/quantize.hpp"
#include "mcad/random.hpp"
#include "mcad/signal.hpp"
#include "mcad/state_evolution.hpp"
#include "mcad/stats.hpp"

namespace mcad {

inline constexpr int kCsvSchemaVersion = 1;

/// Which users a cooperative BS recovers; the rest stay in its noise.
enum class CoopScope {
  full_network,    ///< every user of every cell
  adjacent_cells,  ///< its own cell and the cells one ring around it
};

/// Which tau^2 the thresholds and Delta weights are built from.
enum class TauPolicy {
  common_analytic,  ///< disc-model state evolution at the centre BS, shared by all BSs
  per_bs_drop,      ///< state evolution over the actual gains seen by each BS
};

struct QuantizerConfig {
  int bits = 3;
  double zeta = 0.95;
};

struct ExperimentSpec {
  NetworkConfig network = NetworkConfig::desk_scale();
  Architecture architecture = Architecture::tin_massive;
  int b_bn = 1;
  std::optional<QuantizerConfig> quantizer;
  int trials = 200;
  std::uint64_t seed = 1;
  std::vector<std::string> outputs;  ///< table names to emit; empty = all
  std::string tag = "fig4";          ///< CSV file prefix
  AmpConfig amp;
  Placement placement = Placement::hexagon;
  TauPolicy tau_policy = TauPolicy::common_analytic;
  bool empirical_tau = true;  ///< LLRs use each trial's AMP tau^2
  CoopScope scope = CoopScope::full_network;
  double detection_radius = 0.0;  ///< partial recovery radius in meters
  int focus_cell = 0;
  int threads = 0;  ///< 0 = hardware concurrency

  void validate() const {
    network.validate();
    if (!(network.activity_prob > 0.0 && network.activity_prob < 1.0)) {
      throw ConfigError("experiments need 0 < activity_prob < 1");
    }
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (b_bn < 1) throw ConfigError("B_bn must be >= 1");
    if (b_bn > network.num_cells) throw ConfigError("B_bn must not exceed the number of cells");
    if (architecture == Architecture::tin_massive && b_bn != 1) {
      throw ConfigError("massive-MIMO (TIN) detection uses a single BS; set B_bn = 1");
    }
    if (architecture == Architecture::partial &&
        !(detection_radius >= network.cell_radius() && detection_radius <= network.network_radius() * (1 + 1e-12))) {
      throw ConfigError("partial recovery needs R_cell <= detection_radius <= R_net");
    }
    if (focus_cell < 0 || focus_cell >= network.num_cells) throw ConfigError("focus_cell out of range");
    if (quantizer) QuantizerSpec{quantizer->bits, quantizer->zeta, 1.0}.validate();
    amp.validate();
  }
};

/// A CSV table with a versioned header comment.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void write(std::ostream& out) const {
    out << "# mcad-csv v" << kCsvSchemaVersion << " table=" << name << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
  }

  std::string str() const {
    std::ostringstream s;
    write(s);
    return s.str();
  }
};

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }

/// Writes tables to dir/<name>.csv and returns the paths.
inline std::vector<std::string> write_tables(const std::vector<Table>& tables, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const auto& t : tables) {
    const auto path = (std::filesystem::path(dir) / (t.name + ".csv")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    t.write(out);
    paths.push_back(path);
  }
  return paths;
}

/// Runs body(i) for i in [0, count) on a bounded pool; the first exception is
/// rethrown after all workers stop.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
  int n = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  n = std::max(1, std::min(n, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
}

/// Per-trial cache for the focus cell.
struct TrialStats {
  std::vector<std::uint8_t> active;        ///< focus-cell activities
  std::vector<std::vector<double>> norms;  ///< [serving BS slot][user] ||x~||^2
  std::vector<double> tau_sq;              ///< empirical tau^2 per serving BS slot
  int max_iterations = 0;
  bool converged = true;
};

/// One BS's AMP problem: which columns it recovers and their gains.
struct BsProblem {
  int bs = 0;
  std::vector<int> columns;            ///< global user indices j*N + n
  std::vector<double> gains;           ///< g_{bs, column}
  std::vector<int> focus_position;     ///< position of focus user n in `columns`
  double unrecovered_power = 0.0;      ///< (lambda/L) sum of g^2 over users left in the noise
};

struct Simulation {
  ExperimentSpec spec;
  CellLayout layout;
  UserDrop users;
  int max_bbn = 1;
  std::vector<std::vector<int>> serving;  ///< [user] nearest BSs, max_bbn of them
  std::vector<int> slots;                 ///< BS ids with cached statistics
  std::vector<BsProblem> problems;        ///< parallel to slots
  std::vector<TrialStats> trials;

  int slot_of(int bs) const {
    const auto it = std::find(slots.begin(), slots.end(), bs);
    if (it == slots.end()) throw DomainError("BS " + std::to_string(bs) + " has no cached statistics");
    return static_cast<int>(it - slots.begin());
  }
};

namespace detail {

inline BsProblem make_problem(const ExperimentSpec& spec, const CellLayout& layout, const UserDrop& users, int bs) {
  const auto& cfg = spec.network;
  const int n_count = cfg.users_per_cell;
  BsProblem p;
  p.bs = bs;
  p.focus_position.assign(n_count, -1);
  for (int j = 0; j < cfg.num_cells; ++j) {
    for (int n = 0; n < n_count; ++n) {
      const Point pos = users.at(j, n);
      bool recovered = false;
      switch (spec.architecture) {
        case Architecture::tin_massive:
          recovered = j == bs;
          break;
        case Architecture::rec_cooperative:
          recovered = spec.scope == CoopScope::full_network ||
                      distance(layout.bs[j], layout.bs[bs]) <= layout.spacing * 1.01;
          break;
        case Architecture::partial:
          recovered = j == bs || distance(pos, layout.bs[bs]) <= spec.detection_radius;
          break;
      }
      const double g = pathloss_gain(cfg, distance(layout.bs[bs], pos));
      if (recovered) {
        if (j == spec.focus_cell) p.focus_position[n] = static_cast<int>(p.columns.size());
        p.columns.push_back(j * n_count + n);
        p.gains.push_back(g);
      } else {
        p.unrecovered_power += cfg.activity_prob * g * g / cfg.seq_len;
      }
    }
  }
  for (int n = 0; n < n_count; ++n) {
    if (p.focus_position[n] < 0) {
      throw ConfigError("BS " + std::to_string(bs) + " does not recover focus-cell user " + std::to_string(n) +
                        "; widen the detection scope or lower B_bn");
    }
  }
  return p;
}

}  // namespace detail

/// Phase one: draw trials and cache the focus-cell statistics at every BS
/// among the max_bbn nearest of some focus user.
inline Simulation simulate(const ExperimentSpec& spec, int max_bbn = 0) {
  spec.validate();
  Simulation sim;
  sim.spec = spec;
  sim.max_bbn = std::max(spec.b_bn, max_bbn);
  if (spec.architecture == Architecture::tin_massive) sim.max_bbn = 1;
  const auto& cfg = spec.network;
  sim.layout = build_layout(cfg);
  sim.users = sample_users(cfg, sim.layout, spec.seed, spec.placement);

  for (int n = 0; n < cfg.users_per_cell; ++n) {
    auto order = sim.layout.nearest_cells(sim.users.at(spec.focus_cell, n));
    if (spec.architecture == Architecture::tin_massive) order = {spec.focus_cell};
    order.resize(static_cast<std::size_t>(sim.max_bbn));
    for (int b : order) {
      if (std::find(sim.slots.begin(), sim.slots.end(), b) == sim.slots.end()) sim.slots.push_back(b);
    }
    sim.serving.push_back(std::move(order));
  }
  std::sort(sim.slots.begin(), sim.slots.end());
  for (int b : sim.slots) sim.problems.push_back(detail::make_problem(spec, sim.layout, sim.users, b));

  SynthesisOptions opts;
  opts.receivers = sim.slots;
  sim.trials.resize(static_cast<std::size_t>(spec.trials));
  parallel_for(spec.trials, spec.threads, [&](int t) {
    const std::uint64_t trial_seed = derive_seed(spec.seed, Stream::trial, static_cast<std::uint64_t>(t));
    ScenarioInstance sc;
    try {
      sc = synthesize(cfg, sim.layout, sim.users, trial_seed, opts);
    } catch (const Error& e) {
      throw Error("trial " + std::to_string(t) + ": " + e.what());
    }
    TrialStats ts;
    ts.active.resize(static_cast<std::size_t>(cfg.users_per_cell));
    for (int n = 0; n < cfg.users_per_cell; ++n) ts.active[n] = sc.active(spec.focus_cell, n) ? 1 : 0;
    for (const auto& p : sim.problems) {
      ComplexMatrix s(cfg.seq_len, static_cast<Eigen::Index>(p.columns.size()));
      for (std::size_t c = 0; c < p.columns.size(); ++c) s.col(static_cast<Eigen::Index>(c)) = sc.signatures.col(p.columns[c]);
      MatchedFilterOutput out;
      try {
        out = run_amp(sc.received[p.bs], s, p.gains, cfg.activity_prob, sc.noise_variance, spec.amp);
      } catch (const DivergenceError& e) {
        throw DivergenceError(e.iteration(), "trial " + std::to_string(t) + ", BS " + std::to_string(p.bs) + " (" + e.what() + ")");
      }
      std::vector<double> norms(static_cast<std::size_t>(cfg.users_per_cell));
      for (int n = 0; n < cfg.users_per_cell; ++n) norms[n] = out.squared_norms[p.focus_position[n]];
      ts.norms.push_back(std::move(norms));
      ts.tau_sq.push_back(out.tau_sq_final);
      ts.max_iterations = std::max(ts.max_iterations, out.iterations);
      ts.converged = ts.converged && out.converged;
    }
    sim.trials[t] = std::move(ts);
  });
  return sim;
}

struct EvaluationOptions {
  int b_bn = 1;
  std::optional<QuantizerConfig> quantizer;
  TauPolicy tau_policy = TauPolicy::common_analytic;
  bool empirical_tau = true;  ///< rescale each trial's norms by tau_used^2 / tau_t^2
};

struct ExperimentResult {
  ExperimentSpec spec;
  int b_bn = 1;
  std::optional<QuantizerConfig> quantizer;
  StateEvolutionTrace se;                 ///< disc-model trace for the architecture
  std::vector<int> slots;                 ///< BS ids
  std::vector<double> tau_sq_used;        ///< per slot, for thresholds and Delta
  std::vector<double> tau_sq_empirical;   ///< per slot, mean over trials
  ErrorProfile analytic;
  ErrorProfile empirical;
  std::vector<double> thresholds;         ///< per focus user, on sum_j Delta_j ||x~_j||^2
  long monte_carlo_warnings = 0;
  int nonconverged_trials = 0;
  double binomial_gap = 0.0;              ///< counts vs Binomial(T, p*) mixture
  double cdf_gap = 0.0;                   ///< sup |F_emp - F_analytic| of p_equal
  std::vector<Table> tables;
};

namespace detail {

inline double tau_for_problem(const ExperimentSpec& spec, const BsProblem& p, double common, TauPolicy policy) {
  if (policy == TauPolicy::common_analytic) return common;
  const auto& cfg = spec.network;
  return se_fixed_point_gains(p.gains, cfg.activity_prob, cfg.seq_len, cfg.antennas,
                              cfg.noise_variance() + p.unrecovered_power)
      .tau_sq_inf;
}

inline StateEvolutionTrace disc_trace(const ExperimentSpec& spec) {
  switch (spec.architecture) {
    case Architecture::tin_massive: return se_fixed_point_tin(spec.network);
    case Architecture::rec_cooperative: return se_fixed_point_coop(spec.network);
    case Architecture::partial: return se_partial_recovery(spec.network, spec.detection_radius);
  }
  throw DomainError("unknown architecture");
}

}  // namespace detail

/// Phase two: thresholds, aggregation, optional quantization, error tallies.
inline ExperimentResult evaluate(const Simulation& sim, const EvaluationOptions& opt) {
  const auto& spec = sim.spec;
  const auto& cfg = spec.network;
  if (opt.b_bn < 1 || opt.b_bn > sim.max_bbn) {
    throw ConfigError("B_bn = " + std::to_string(opt.b_bn) + " exceeds the simulated cooperation size " +
                      std::to_string(sim.max_bbn));
  }
  const int n_count = cfg.users_per_cell;
  const int m = cfg.antennas;
  const double lambda = cfg.activity_prob;

  ExperimentResult r;
  r.spec = spec;
  r.b_bn = opt.b_bn;
  r.quantizer = opt.quantizer;
  r.slots = sim.slots;
  r.se = detail::disc_trace(spec);
  for (const auto& p : sim.problems) r.tau_sq_used.push_back(detail::tau_for_problem(spec, p, r.se.tau_sq_inf, opt.tau_policy));
  r.tau_sq_empirical.assign(sim.slots.size(), 0.0);
  for (const auto& t : sim.trials) {
    for (std::size_t s = 0; s < t.tau_sq.size(); ++s) r.tau_sq_empirical[s] += t.tau_sq[s] / sim.trials.size();
    if (!t.converged) ++r.nonconverged_trials;
  }

  // Per-user analytic thresholds, Delta weights and quantizers.
  struct UserPlan {
    std::vector<int> slot;
    std::vector<double> delta;
    std::vector<QuantizerSpec> quant;
  };
  std::vector<UserPlan> plans(static_cast<std::size_t>(n_count));
  r.analytic.source = ProfileSource::analytic;
  r.thresholds.resize(static_cast<std::size_t>(n_count));
  for (int n = 0; n < n_count; ++n) {
    std::vector<double> gains;
    std::vector<double> taus;
    auto& plan = plans[n];
    for (int k = 0; k < opt.b_bn; ++k) {
      const int bs = sim.serving[n][k];
      const int slot = sim.slot_of(bs);
      const double g = sim.problems[slot].gains[sim.problems[slot].focus_position[n]];
      const double tau = r.tau_sq_used[slot];
      gains.push_back(g);
      taus.push_back(tau);
      plan.slot.push_back(slot);
      plan.delta.push_back(llr_delta(g, tau));
      if (opt.quantizer) plan.quant.push_back(make_quantizer(opt.quantizer->bits, opt.quantizer->zeta, g, tau, m, lambda));
    }
    const CoopStatistic stat(gains, taus, m);
    const auto eq = equal_error_threshold(stat);
    if (stat.active().monte_carlo()) ++r.monte_carlo_warnings;
    r.thresholds[n] = eq.threshold;
    UserError u;
    u.cell = spec.focus_cell;
    u.user = n;
    u.g = gains[0];
    u.p_miss = eq.p_miss;
    u.p_fa = eq.p_fa;
    u.p_equal = eq.p_equal;
    u.threshold = eq.threshold;
    r.analytic.users.push_back(u);
  }
  r.analytic.finalize();

  // Decisions; per-trial tallies merged in trial order.
  std::vector<ErrorCounts> counts(static_cast<std::size_t>(n_count));
  for (const auto& t : sim.trials) {
    for (int n = 0; n < n_count; ++n) {
      const auto& plan = plans[n];
      double stat = 0.0;
      for (std::size_t k = 0; k < plan.slot.size(); ++k) {
        double v = t.norms[plan.slot[k]][n];
        if (opt.empirical_tau) v *= r.tau_sq_used[plan.slot[k]] / t.tau_sq[plan.slot[k]];
        if (opt.quantizer) v = quantize(v, plan.quant[k]);
        stat += plan.delta[k] * v;
      }
      counts[n].record(t.active[n] != 0, stat >= r.thresholds[n]);
    }
  }
  std::vector<double> g_serving;
  for (const auto& u : r.analytic.users) g_serving.push_back(u.g);
  r.empirical = empirical_error_profile(counts, g_serving, r.thresholds, spec.focus_cell);

  std::vector<long> errs;
  std::vector<double> p_star;
  for (int n = 0; n < n_count; ++n) {
    errs.push_back(counts[n].misses + counts[n].false_alarms);
    p_star.push_back(r.analytic.users[n].p_equal);
  }
  r.binomial_gap = stats::binomial_predictive_gap(errs, p_star, static_cast<long>(sim.trials.size()));
  r.cdf_gap = stats::ks_distance(std::span<const double>(r.empirical.cdf), std::span<const double>(r.analytic.cdf));

  // Tables.
  const std::string arch = architecture_name(spec.architecture);
  Table cdf{spec.tag + "_cdf", {"architecture", "b_bn", "source", "percentile", "p"}, {}};
  Table profile{spec.tag + "_profile", {"architecture", "b_bn", "source", "cell", "user", "g", "P_M", "P_F", "p_equal"}, {}};
  for (const auto* p : {&r.analytic, &r.empirical}) {
    const std::string src = p->source == ProfileSource::analytic ? "analytic" : "empirical";
    for (std::size_t i = 0; i < p->cdf.size(); ++i) {
      cdf.rows.push_back({arch, fmt(opt.b_bn), src, fmt(static_cast<double>(i + 1) / p->cdf.size()), fmt(p->cdf[i])});
    }
    for (const auto& u : p->users) {
      profile.rows.push_back({arch, fmt(opt.b_bn), src, fmt(u.cell), fmt(u.user), fmt(u.g), fmt(u.p_miss), fmt(u.p_fa),
                              fmt(u.p_equal)});
    }
  }
  Table trace{spec.tag + "_se_trace", {"t", "tau_sq"}, {}};
  for (std::size_t t = 0; t < r.se.tau_sq_seq.size(); ++t) trace.rows.push_back({fmt(static_cast<int>(t)), fmt(r.se.tau_sq_seq[t])});
  Table summary{spec.tag + "_summary", {"metric", "value"}, {}};
  auto add = [&](const std::string& k, const std::string& v) { summary.rows.push_back({k, v}); };
  add("architecture", arch);
  add("b_bn", fmt(opt.b_bn));
  add("quant_bits", opt.quantizer ? fmt(opt.quantizer->bits) : "none");
  add("zeta", opt.quantizer ? fmt(opt.quantizer->zeta) : "none");
  add("trials", fmt(static_cast<int>(sim.trials.size())));
  add("seed", std::to_string(spec.seed));
  add("llr_tau", opt.empirical_tau ? "empirical" : "analytic");
  add("tau_sq_se", fmt(r.se.tau_sq_inf));
  for (std::size_t s = 0; s < r.slots.size(); ++s) {
    add("tau_sq_used_bs" + std::to_string(r.slots[s]), fmt(r.tau_sq_used[s]));
    add("tau_sq_empirical_bs" + std::to_string(r.slots[s]), fmt(r.tau_sq_empirical[s]));
  }
  add("cell_edge_analytic", fmt(r.analytic.cell_edge_95));
  add("cell_edge_empirical", fmt(r.empirical.cell_edge_95));
  add("cdf_gap", fmt(r.cdf_gap));
  add("binomial_gap", fmt(r.binomial_gap));
  add("nonconverged_trials", fmt(r.nonconverged_trials));
  add("monte_carlo_warnings", fmt(static_cast<long long>(r.monte_carlo_warnings)));
  if (opt.quantizer) {
    QuantizerSpec q{opt.quantizer->bits, opt.quantizer->zeta, 1.0};
    add("fronthaul_bits_per_bs", fmt(static_cast<long long>(fronthaul_bits(q, n_count, opt.b_bn))));
  }
  for (auto* t : {&cdf, &profile, &trace, &summary}) {
    const auto suffix = t->name.substr(spec.tag.size() + 1);
    if (spec.outputs.empty() || std::find(spec.outputs.begin(), spec.outputs.end(), suffix) != spec.outputs.end()) {
      r.tables.push_back(std::move(*t));
    }
  }
  return r;
}

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  try {
    const auto sim = simulate(spec);
    return evaluate(sim, {spec.b_bn, spec.quantizer, spec.tau_policy, spec.empirical_tau});
  } catch (const Error& e) {
    throw Error(std::string("experiment '") + spec.tag + "' (" + architecture_name(spec.architecture) +
                ", B_bn=" + std::to_string(spec.b_bn) + "): " + e.what());
  }
}

/// Analytic-only profile for the focus cell (no trials).
inline ExperimentResult predict(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentSpec s = spec;
  const auto& cfg = s.network;
  ExperimentResult r;
  r.spec = s;
  r.b_bn = s.b_bn;
  r.se = detail::disc_trace(s);
  const auto layout = build_layout(cfg);
  const auto users = sample_users(cfg, layout, s.seed, s.placement);
  std::map<int, double> tau_at;
  r.analytic.source = ProfileSource::analytic;
  for (int n = 0; n < cfg.users_per_cell; ++n) {
    const Point pos = users.at(s.focus_cell, n);
    auto order = layout.nearest_cells(pos);
    if (s.architecture == Architecture::tin_massive) order = {s.focus_cell};
    std::vector<double> gains;
    std::vector<double> taus;
    for (int k = 0; k < s.b_bn; ++k) {
      const int bs = order[k];
      if (!tau_at.count(bs)) {
        tau_at[bs] = s.tau_policy == TauPolicy::common_analytic
                         ? r.se.tau_sq_inf
                         : detail::tau_for_problem(s, detail::make_problem(s, layout, users, bs), r.se.tau_sq_inf,
                                                   s.tau_policy);
      }
      gains.push_back(pathloss_gain(cfg, distance(layout.bs[bs], pos)));
      taus.push_back(tau_at[bs]);
    }
    const CoopStatistic stat(gains, taus, cfg.antennas);
    const auto eq = equal_error_threshold(stat);
    if (stat.active().monte_carlo()) ++r.monte_carlo_warnings;
    UserError u;
    u.cell = s.focus_cell;
    u.user = n;
    u.g = gains[0];
    u.p_miss = eq.p_miss;
    u.p_fa = eq.p_fa;
    u.p_equal = eq.p_equal;
    u.threshold = eq.threshold;
    r.thresholds.push_back(eq.threshold);
    r.analytic.users.push_back(u);
  }
  r.analytic.finalize();
  for (const auto& [bs, tau] : tau_at) {
    r.slots.push_back(bs);
    r.tau_sq_used.push_back(tau);
  }
  const std::string arch = architecture_name(s.architecture);
  Table cdf{s.tag + "_cdf", {"architecture", "b_bn", "source", "percentile", "p"}, {}};
  for (std::size_t i = 0; i < r.analytic.cdf.size(); ++i) {
    cdf.rows.push_back({arch, fmt(s.b_bn), "analytic", fmt(static_cast<double>(i + 1) / r.analytic.cdf.size()),
                        fmt(r.analytic.cdf[i])});
  }
  Table trace{s.tag + "_se_trace", {"t", "tau_sq"}, {}};
  for (std::size_t t = 0; t < r.se.tau_sq_seq.size(); ++t) trace.rows.push_back({fmt(static_cast<int>(t)), fmt(r.se.tau_sq_seq[t])});
  r.tables = {cdf, trace};
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepParameter { antennas, seq_len, b_bn, quant_bits, zeta, detection_radius };

inline SweepParameter parse_sweep_parameter(const std::string& name) {
  if (name == "M" || name == "antennas") return SweepParameter::antennas;
  if (name == "L" || name == "seq_len") return SweepParameter::seq_len;
  if (name == "B_bn" || name == "bbn") return SweepParameter::b_bn;
  if (name == "Q" || name == "q_bits") return SweepParameter::quant_bits;
  if (name == "zeta") return SweepParameter::zeta;
  if (name == "detection_radius") return SweepParameter::detection_radius;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected M, L, B_bn, Q, zeta, detection_radius)");
}

inline const char* sweep_table_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::antennas: return "fig6_antennas";
    case SweepParameter::seq_len: return "fig7_seq_len";
    case SweepParameter::b_bn: return "fig5_bbn";
    case SweepParameter::quant_bits: return "fig8_quant_bits";
    case SweepParameter::zeta: return "fig9_zeta";
    case SweepParameter::detection_radius: return "fig3_detection_radius";
  }
  return "sweep";
}

/// One row per value. trials = 0 in `analytic_only` mode skips simulation.
inline Table sweep(const ExperimentSpec& spec, SweepParameter param, const std::vector<double>& values,
                   bool analytic_only = false) {
  if (values.empty()) throw ConfigError("sweep: no values");
  Table t{sweep_table_name(param),
          {"parameter", "value", "architecture", "b_bn", "tau_sq_analytic", "tau_sq_empirical", "cell_edge_analytic",
           "cell_edge_empirical", "mean_p_analytic", "mean_p_empirical"},
          {}};
  auto row = [&](double value, const ExperimentResult& r) {
    const double emp_tau = r.tau_sq_empirical.empty()
                               ? std::numeric_limits<double>::quiet_NaN()
                               : r.tau_sq_empirical[std::find(r.slots.begin(), r.slots.end(), r.spec.focus_cell) - r.slots.begin()];
    const bool has_emp = !r.empirical.users.empty();
    t.rows.push_back({sweep_table_name(param), fmt(value), architecture_name(r.spec.architecture), fmt(r.b_bn),
                      fmt(r.se.tau_sq_inf), fmt(emp_tau), fmt(r.analytic.cell_edge_95),
                      has_emp ? fmt(r.empirical.cell_edge_95) : "nan", fmt(stats::mean(r.analytic.cdf)),
                      has_emp ? fmt(stats::mean(r.empirical.cdf)) : "nan"});
  };
  auto as_int = [](double v, const char* what) {
    if (v != std::floor(v) || v < 0) throw ConfigError(std::string("sweep: ") + what + " must be a non-negative integer");
    return static_cast<int>(v);
  };

  switch (param) {
    case SweepParameter::antennas:
    case SweepParameter::seq_len:
    case SweepParameter::detection_radius:
      for (double v : values) {
        ExperimentSpec s = spec;
        if (param == SweepParameter::antennas) s.network.antennas = as_int(v, "M");
        if (param == SweepParameter::seq_len) s.network.seq_len = as_int(v, "L");
        if (param == SweepParameter::detection_radius) {
          s.architecture = Architecture::partial;
          s.detection_radius = v;
        }
        row(v, analytic_only ? predict(s) : run_experiment(s));
      }
      break;
    case SweepParameter::b_bn: {
      int max_b = 1;
      for (double v : values) max_b = std::max(max_b, as_int(v, "B_bn"));
      if (analytic_only) {
        for (double v : values) {
          ExperimentSpec s = spec;
          s.b_bn = as_int(v, "B_bn");
          row(v, predict(s));
        }
        break;
      }
      const auto sim = simulate(spec, max_b);
      for (double v : values) row(v, evaluate(sim, {as_int(v, "B_bn"), spec.quantizer, spec.tau_policy, spec.empirical_tau}));
      break;
    }
    case SweepParameter::quant_bits:
    case SweepParameter::zeta: {
      if (analytic_only) throw ConfigError("quantizer sweeps need simulated statistics");
      const auto sim = simulate(spec);
      for (double v : values) {
        QuantizerConfig q = spec.quantizer.value_or(QuantizerConfig{});
        if (param == SweepParameter::quant_bits) q.bits = as_int(v, "Q");
        else q.zeta = v;
        row(v, evaluate(sim, {spec.b_bn, q, spec.tau_policy, spec.empirical_tau}));
      }
      break;
    }
  }
  return t;
}

}  // namespace mcad
