#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cvi/algo_config.hpp"
#include "cvi/envs.hpp"
#include "cvi/errors.hpp"
#include "cvi/linear_agent.hpp"
#include "cvi/oracle.hpp"
#include "cvi/run_record.hpp"
#include "cvi/tabular_agent.hpp"
#include "cvi/text_format.hpp"

namespace cvi {

enum class Algorithm { kTabularUcbCvi, kLinearLscviUcb };

inline std::string to_string(Algorithm a) {
  return a == Algorithm::kTabularUcbCvi ? "tabular_ucb_cvi" : "linear_lscvi_ucb";
}

inline Algorithm algorithm_from_string(const std::string& text) {
  if (text == "tabular_ucb_cvi") return Algorithm::kTabularUcbCvi;
  if (text == "linear_lscvi_ucb") return Algorithm::kLinearLscviUcb;
  throw ConfigError("unknown algorithm '" + text + "'");
}

/// Values that replace the default recipe when present.
struct AlgoOverrides {
  std::optional<double> gamma;
  std::optional<double> lambda;
  std::optional<double> span_bound;
  std::optional<double> bonus_factor;
  std::optional<double> delta;
  std::optional<double> c;  // c for the tabular agent, c_beta for the linear one
  std::optional<ClipMode> clip_mode;
};

struct ExperimentConfig {
  EnvSpec env;
  std::optional<std::string> env_file;
  Algorithm algorithm = Algorithm::kTabularUcbCvi;
  std::int64_t horizon = 1000;
  std::vector<std::uint64_t> seeds{0};
  AlgoOverrides overrides;
  std::string out_dir;  // empty: nothing is written
  bool check_optimism = false;
  unsigned max_workers = 0;  // 0: one per hardware thread

  void validate() const {
    if (seeds.empty()) throw ConfigError("experiment: seeds must be nonempty");
    if (horizon < 1) throw ConfigError("experiment: horizon must be >= 1");
    env.validate();
  }
};

/// Bits set in ResultRow::invariant_flags when the corresponding check passed
/// (or does not apply to the algorithm that ran).
enum InvariantFlag : std::uint32_t {
  kFlagValueBounds = 1u << 0,
  kFlagSpanClip = 1u << 1,
  kFlagMonotone = 1u << 2,
  kFlagOrdering = 1u << 3,
  kFlagBonusSum = 1u << 4,
  kFlagEpisodeCount = 1u << 5,
  kFlagWeightNorm = 1u << 6,
  kFlagEllipticalPotential = 1u << 7,
  kFlagFixedDesignPotential = 1u << 8,
  kFlagDeterminantComparison = 1u << 9,
  kFlagDeterminantTracking = 1u << 10,
  kFlagRunRecord = 1u << 11,
  kFlagOptimism = 1u << 12,
  kAllFlags = (1u << 13) - 1,
};

inline std::vector<std::string> failed_flag_names(std::uint32_t flags) {
  static const char* names[] = {"value-bounds",       "span-clip",           "monotone",
                                "ordering",           "bonus-sum",           "episode-count",
                                "weight-norm",        "elliptical-potential", "fixed-design-potential",
                                "det-comparison",     "det-tracking",        "run-record",
                                "optimism"};
  std::vector<std::string> out;
  for (unsigned i = 0; i < 13; ++i)
    if (!(flags & (1u << i))) out.emplace_back(names[i]);
  return out;
}

struct ResultRow {
  std::uint64_t seed = 0;
  std::int64_t horizon = 0;
  double final_regret = 0.0;
  std::int64_t episode_count = 1;
  double runtime_ms = 0.0;
  std::uint32_t invariant_flags = 0;

  bool invariants_ok() const { return invariant_flags == kAllFlags; }
};

/// Worst-case slacks observed in one run; positive means the bound held with room.
struct RunDiagnostics {
  double bonus_sum = 0.0;
  double bonus_sum_bound = INFINITY;
  double worst_span_slack = INFINITY;
  double worst_cap_slack = INFINITY;
  double worst_weight_slack = INFINITY;
  double elliptical_sum = 0.0;
  double elliptical_bound = INFINITY;
  double fixed_design_sum = 0.0;
  double worst_det_comparison_slack = INFINITY;
  double episode_bound = INFINITY;
  double worst_optimism = INFINITY;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<RunDiagnostics> diagnostics;
  std::vector<RunRecord> records;
  AlgoConfig resolved;  // seed field is per row
  OracleSolution oracle;
  std::vector<std::string> written_files;
};

/// Oracle solutions keyed by serialized environment and discount factor.
class OracleCache {
 public:
  const OracleSolution& get(const TabularMDP& mdp, double gamma) {
    const std::string key = write_environment(Environment{mdp}) + "#" + format_double(gamma);
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, solve_oracle(mdp, gamma)).first;
    return it->second;
  }
  const AverageRewardSolution& average(const TabularMDP& mdp) {
    const std::string key = write_environment(Environment{mdp});
    std::lock_guard lock(mutex_);
    auto it = avg_.find(key);
    if (it == avg_.end()) it = avg_.emplace(key, solve_average_reward(mdp)).first;
    return it->second;
  }
  std::size_t size() const { return cache_.size() + avg_.size(); }

 private:
  std::mutex mutex_;
  std::map<std::string, OracleSolution> cache_;
  std::map<std::string, AverageRewardSolution> avg_;
};

/// Checks lengths, episode starts and regret increments of a finished record.
inline bool check_run_record(const RunRecord& rec, std::int64_t horizon) {
  const auto T = static_cast<std::size_t>(horizon);
  if (rec.states.size() != T || rec.actions.size() != T || rec.rewards.size() != T) return false;
  if (rec.regret_series.size() != T || rec.episode_of_step.size() != T) return false;
  if (rec.episode_starts.empty() || rec.episode_starts.front() != 1) return false;
  for (std::size_t i = 1; i < rec.episode_starts.size(); ++i)
    if (rec.episode_starts[i] <= rec.episode_starts[i - 1]) return false;
  if (static_cast<std::int64_t>(rec.episode_starts.size()) > rec.episode_count) return false;
  double prev = 0.0;
  for (std::size_t i = 0; i < T; ++i) {
    if (std::abs((rec.regret_series[i] - prev) - (rec.j_star - rec.rewards[i])) > 1e-9) return false;
    prev = rec.regret_series[i];
  }
  return true;
}

// ---------------------------------------------------------------------------
// Config files

namespace detail {

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream in(normalized);
  std::string tok;
  while (in >> tok) {
    const auto dots = tok.find("..");
    if (dots != std::string::npos) {
      const auto lo = parse_size(tok.substr(0, dots), "seed range");
      const auto hi = parse_size(tok.substr(dots + 2), "seed range");
      if (hi < lo) throw ConfigError("seed range '" + tok + "' is empty");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_size(tok, "seed"));
    }
  }
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  return seeds;
}

inline bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("cannot parse boolean '" + text + "'");
}

}  // namespace detail

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) { return detail::parse_seeds(text); }

/// Reads [experiment], [env] and optional [algo] sections.
inline ExperimentConfig experiment_from_document(const KvDocument& doc) {
  ExperimentConfig cfg;
  doc.require("experiment");
  doc.require("env");
  if (auto v = doc.get("experiment", "algorithm")) cfg.algorithm = algorithm_from_string(*v);
  if (auto v = doc.get("experiment", "horizon")) cfg.horizon = static_cast<std::int64_t>(parse_size(*v, "horizon"));
  if (auto v = doc.get("experiment", "seeds")) cfg.seeds = detail::parse_seeds(*v);
  if (auto v = doc.get("experiment", "out")) cfg.out_dir = *v;
  if (auto v = doc.get("experiment", "check_optimism")) cfg.check_optimism = detail::parse_bool(*v);
  if (auto v = doc.get("experiment", "workers")) cfg.max_workers = static_cast<unsigned>(parse_size(*v, "workers"));

  if (auto v = doc.get("env", "file")) cfg.env_file = *v;
  if (auto v = doc.get("env", "kind")) cfg.env.kind = env_kind_from_string(*v);
  if (auto v = doc.get("env", "base")) cfg.env.base = env_kind_from_string(*v);
  if (auto v = doc.get("env", "S")) cfg.env.num_states = parse_size(*v, "S");
  if (auto v = doc.get("env", "A")) cfg.env.num_actions = parse_size(*v, "A");
  if (auto v = doc.get("env", "d")) cfg.env.dim = parse_size(*v, "d");
  if (auto v = doc.get("env", "seed")) cfg.env.seed = parse_size(*v, "env seed");
  if (auto v = doc.get("env", "slip")) cfg.env.slip = parse_real(*v, "slip");
  if (auto v = doc.get("env", "concentration")) cfg.env.concentration = parse_real(*v, "concentration");

  auto real = [&](const char* key, std::optional<double>& slot) {
    if (auto v = doc.get("algo", key)) slot = parse_real(*v, key);
  };
  real("gamma", cfg.overrides.gamma);
  real("lambda", cfg.overrides.lambda);
  real("H", cfg.overrides.span_bound);
  real("beta", cfg.overrides.bonus_factor);
  real("delta", cfg.overrides.delta);
  real("c", cfg.overrides.c);
  if (auto v = doc.get("algo", "clip_mode")) cfg.overrides.clip_mode = clip_mode_from_string(*v);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_from_document(read_kv_file(path));
}

inline Environment build_environment(const ExperimentConfig& cfg) {
  if (cfg.env_file) return read_environment_file(*cfg.env_file);
  return make_env(cfg.env);
}

/// Fills the algorithm config from the default recipe, then applies overrides.
inline AlgoConfig resolve_algo_config(const ExperimentConfig& cfg, std::size_t S, std::size_t A, std::size_t dim,
                                      double sp_v_star) {
  const double delta = cfg.overrides.delta.value_or(0.1);
  AlgoConfig out;
  if (cfg.algorithm == Algorithm::kTabularUcbCvi) {
    out = default_tabular_config(S, A, sp_v_star, cfg.horizon, delta, cfg.overrides.c.value_or(2.0));
  } else if (cfg.horizon >= 3) {
    out = default_linear_config(dim, sp_v_star, cfg.horizon, delta, cfg.overrides.c.value_or(1.0));
  } else {
    // The linear recipe needs T >= 3; short runs require an explicit gamma.
    if (!cfg.overrides.gamma) throw ConfigError("linear runs with horizon < 3 need an explicit gamma");
    out.horizon = cfg.horizon;
    out.lambda = 1.0;
    out.span_bound = 2.0 * sp_v_star;
    out.delta = delta;
    out.c_beta = cfg.overrides.c.value_or(1.0);
    out.bonus_factor = 0.0;
  }
  if (cfg.overrides.gamma) out.gamma = *cfg.overrides.gamma;
  if (cfg.overrides.lambda) out.lambda = *cfg.overrides.lambda;
  if (cfg.overrides.span_bound) out.span_bound = *cfg.overrides.span_bound;
  if (cfg.overrides.bonus_factor) out.bonus_factor = *cfg.overrides.bonus_factor;
  if (cfg.overrides.clip_mode) out.clip_mode = *cfg.overrides.clip_mode;
  return out;
}

// ---------------------------------------------------------------------------
// Output files

inline std::string series_csv(const RunRecord& rec) {
  std::ostringstream out;
  out << "t,reward,cumulative_regret,episode_index\n";
  for (std::size_t i = 0; i < rec.length(); ++i)
    out << (i + 1) << "," << format_double(rec.rewards[i]) << "," << format_double(rec.regret_series[i]) << ","
        << rec.episode_of_step[i] << "\n";
  return out.str();
}

inline std::string summary_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "seed,T,final_regret,episode_count,invariant_flags\n";
  for (const auto& r : rows)
    out << r.seed << "," << r.horizon << "," << format_double(r.final_regret) << "," << r.episode_count << ","
        << r.invariant_flags << "\n";
  return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

// ---------------------------------------------------------------------------
// Runs

namespace detail {

struct SeedOutcome {
  ResultRow row;
  RunDiagnostics diag;
  RunRecord record;
};

inline SeedOutcome run_one_seed(const ExperimentConfig& cfg, const Environment& env, const TabularMDP& mdp,
                                const OracleSolution& oracle, AlgoConfig algo, std::uint64_t seed) {
  algo.seed = seed;
  SeedOutcome out;
  const auto start = std::chrono::steady_clock::now();
  std::uint32_t flags = kAllFlags;
  auto clear = [&](bool ok, InvariantFlag f) {
    if (!ok) flags &= ~static_cast<std::uint32_t>(f);
  };

  if (cfg.algorithm == Algorithm::kTabularUcbCvi) {
    TabularInvariantMonitor mon;
    if (cfg.check_optimism) mon.set_optimism_reference(oracle.discounted_v_star, oracle.discounted_q_star);
    out.record = run_tabular(mdp, algo, &mon);
    clear(mon.bounds_ok(), kFlagValueBounds);
    clear(mon.span_ok(), kFlagSpanClip);
    clear(mon.monotone_ok(), kFlagMonotone);
    clear(mon.ordering_ok() && mon.model_ok(), kFlagOrdering);
    const double bound = mon.bonus_sum_bound(mdp.num_states(), mdp.num_actions());
    clear(mon.bonus_sum() <= bound, kFlagBonusSum);
    if (cfg.check_optimism) clear(mon.worst_optimism() >= -TabularInvariantMonitor::kTol, kFlagOptimism);
    out.diag.bonus_sum = mon.bonus_sum();
    out.diag.bonus_sum_bound = bound;
    out.diag.worst_span_slack = mon.worst_span_slack();
    out.diag.worst_optimism = mon.worst_optimism();
  } else {
    const LinearMDPEnv lin = as_linear(env);
    LinearInvariantMonitor mon;
    if (cfg.check_optimism) mon.set_optimism_reference(oracle.discounted_v_star);
    out.record = run_linear(lin, algo, &mon);
    clear(mon.cap_ok() && mon.q_nonnegative_ok(), kFlagValueBounds);
    clear(mon.span_ok(), kFlagSpanClip);
    clear(mon.ordering_ok(), kFlagOrdering);
    clear(mon.episode_count_ok(), kFlagEpisodeCount);
    clear(mon.weight_norm_ok(), kFlagWeightNorm);
    clear(mon.elliptical_ok(), kFlagEllipticalPotential);
    clear(mon.fixed_design_ok(), kFlagFixedDesignPotential);
    clear(mon.det_comparison_ok(), kFlagDeterminantComparison);
    clear(mon.det_tracking_ok(), kFlagDeterminantTracking);
    if (cfg.check_optimism) clear(mon.worst_optimism() >= -1e-6, kFlagOptimism);
    out.diag.worst_span_slack = mon.worst_span_slack();
    out.diag.worst_cap_slack = mon.worst_cap_slack();
    out.diag.worst_weight_slack = mon.worst_weight_slack();
    out.diag.elliptical_sum = mon.elliptical_sum();
    out.diag.elliptical_bound = mon.elliptical_bound();
    out.diag.fixed_design_sum = mon.fixed_design_sum();
    out.diag.worst_det_comparison_slack = mon.worst_det_comparison_slack();
    out.diag.episode_bound = mon.episode_bound();
    out.diag.worst_optimism = mon.worst_optimism();
  }
  regret_of(out.record, oracle.j_star);
  clear(check_run_record(out.record, algo.horizon), kFlagRunRecord);

  out.row.seed = seed;
  out.row.horizon = algo.horizon;
  out.row.final_regret = out.record.final_regret();
  out.row.episode_count = out.record.episode_count;
  out.row.invariant_flags = flags;
  out.row.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace detail

/// Runs one algorithm on one environment for every seed.
///
/// The oracle is solved once per environment (through `cache` when given).
/// With a nonempty out_dir, writes series_seed<seed>.csv per seed and
/// summary.csv, both byte-identical across repeats, plus timing.csv.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, OracleCache* cache = nullptr,
                                       bool keep_records = false) {
  cfg.validate();
  const Environment env = build_environment(cfg);
  const TabularMDP mdp = as_tabular(env);
  if (const auto rep = validate_tabular(mdp); !rep.ok()) throw ConfigError("environment is invalid\n" + rep.describe());
  const std::size_t dim = as_linear(env).dim();

  ExperimentResult result;
  try {
    OracleCache local;
    OracleCache& oc = cache ? *cache : local;
    const auto& avg = oc.average(mdp);
    result.resolved = resolve_algo_config(cfg, mdp.num_states(), mdp.num_actions(), dim, avg.span_v);
    result.oracle = oc.get(mdp, result.resolved.gamma);
  } catch (const NonConvergence& e) {
    throw SolverError(std::string("oracle failed: ") + e.what());
  }
  if (result.resolved.clip_mode == ClipMode::kMinOfVStar && !result.resolved.min_v_star)
    result.resolved.min_v_star = min_of(result.oracle.discounted_v_star);
  result.resolved.validate();

  const std::size_t n = cfg.seeds.size();
  std::vector<detail::SeedOutcome> outcomes(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        outcomes[i] = detail::run_one_seed(cfg, env, mdp, result.oracle, result.resolved, cfg.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned workers = cfg.max_workers ? cfg.max_workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& o : outcomes) {
    result.rows.push_back(o.row);
    result.diagnostics.push_back(o.diag);
  }

  if (!cfg.out_dir.empty()) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& o : outcomes) {
      const auto path = dir / ("series_seed" + std::to_string(o.row.seed) + ".csv");
      write_text_file(path, series_csv(o.record));
      result.written_files.push_back(path.string());
    }
    write_text_file(dir / "summary.csv", summary_csv(result.rows));
    result.written_files.push_back((dir / "summary.csv").string());
    std::ostringstream timing;
    timing << "seed,runtime_ms\n";
    for (const auto& r : result.rows) timing << r.seed << "," << format_double(r.runtime_ms) << "\n";
    write_text_file(dir / "timing.csv", timing.str());
  }
  if (keep_records)
    for (auto& o : outcomes) result.records.push_back(std::move(o.record));
  return result;
}

// ---------------------------------------------------------------------------
// Lemma checks

struct LemmaEntry {
  std::string name;
  bool passed = true;
  double worst_slack = INFINITY;
  std::int64_t cases = 0;
  std::string detail;
};

struct LemmaReport {
  std::vector<LemmaEntry> entries;

  bool all_passed() const {
    return std::all_of(entries.begin(), entries.end(), [](const LemmaEntry& e) { return e.passed; });
  }
  const LemmaEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
  std::string to_string() const {
    std::ostringstream out;
    for (const auto& e : entries)
      out << (e.passed ? "PASS " : "FAIL ") << e.name << " cases=" << e.cases
          << " worst_slack=" << format_double(e.worst_slack) << (e.detail.empty() ? "" : " " + e.detail) << "\n";
    return out.str();
  }
  KvDocument to_document() const {
    KvDocument doc;
    for (const auto& e : entries) {
      auto& sec = doc.section_mut(e.name);
      sec.set("status", e.passed ? "PASS" : "FAIL");
      sec.set("cases", std::to_string(e.cases));
      sec.set("worst_slack", format_double(e.worst_slack));
    }
    return doc;
  }
};

struct LemmaSuiteOptions {
  /// Discounted-approximation sweep: random MDPs unless `mdps` is given.
  std::size_t random_mdps = 20;
  std::size_t max_states = 5;
  std::size_t max_actions = 3;
  std::uint64_t mdp_seed = 1;
  std::vector<double> gammas{0.9, 0.99};
  std::vector<TabularMDP> mdps;
  double tolerance = 1e-8;

  /// Tabular runs for the bonus-sum lemma.
  std::size_t chain_states = 5;
  double chain_slip = 0.1;
  std::int64_t tabular_horizon = 5000;
  std::vector<std::uint64_t> tabular_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

  /// Linear runs for the episode, weight, potential and determinant lemmas.
  std::vector<std::size_t> linear_dims{2, 4, 8};
  std::vector<std::int64_t> linear_horizons{1000};
  std::size_t linear_states = 6;
  std::size_t linear_actions = 3;
  std::vector<std::uint64_t> linear_seeds{0, 1, 2};

  /// Adds a deliberately false inequality, sp(V*) <= 0.5 sp(v*), on a chain.
  bool inverted_meta_check = false;
};

namespace detail {

inline void absorb(LemmaEntry& e, double slack, double tol = 0.0) {
  ++e.cases;
  e.worst_slack = std::min(e.worst_slack, slack);
  if (!(slack >= -tol)) e.passed = false;
}

}  // namespace detail

inline LemmaReport lemma_suite(const LemmaSuiteOptions& opt = {}) {
  LemmaReport report;
  LemmaEntry span_entry{"discounted-span", true, INFINITY, 0, "sp(V*) <= 2 sp(v*)"};
  LemmaEntry gain_entry{"discounted-gain", true, INFINITY, 0, "|(1-g)V* - J*| <= (1-g) sp(v*)"};

  std::vector<TabularMDP> mdps = opt.mdps;
  if (mdps.empty()) {
    Rng pick(opt.mdp_seed);
    for (std::size_t i = 0; i < opt.random_mdps; ++i) {
      const std::size_t S = 1 + pick.next_u64() % opt.max_states;
      const std::size_t A = 1 + pick.next_u64() % opt.max_actions;
      mdps.push_back(make_random_tabular(S, A, 1.0, pick.next_u64()));
    }
  }
  for (const auto& mdp : mdps)
    for (double g : opt.gammas) {
      const auto rep = check_discounted_approx(mdp, g, opt.tolerance);
      detail::absorb(span_entry, rep.span_ratio_slack, opt.tolerance);
      detail::absorb(gain_entry, rep.j_gap_slack, opt.tolerance);
    }
  report.entries.push_back(span_entry);
  report.entries.push_back(gain_entry);

  if (opt.inverted_meta_check) {
    LemmaEntry inv{"inverted-span-meta", true, INFINITY, 0, "sp(V*) <= 0.5 sp(v*) (expected to fail)"};
    const auto chain = make_chain(opt.chain_states, opt.chain_slip);
    const auto avg = solve_average_reward(chain);
    for (double g : opt.gammas) {
      const auto disc = solve_discounted(chain, g);
      detail::absorb(inv, 0.5 * avg.span_v - span(disc.v), opt.tolerance);
    }
    report.entries.push_back(inv);
  }

  LemmaEntry bonus{"bonus-sum", true, INFINITY, 0, "sum 1/sqrt(N) <= 2 sqrt(SAT)"};
  LemmaEntry tab_clip{"tabular-clip-monotone", true, INFINITY, 0, "sp(V_t) <= H, Q_t and V_t nonincreasing"};
  if (opt.tabular_horizon > 0 && !opt.tabular_seeds.empty()) {
    ExperimentConfig cfg;
    cfg.env.kind = EnvKind::kChain;
    cfg.env.num_states = opt.chain_states;
    cfg.env.slip = opt.chain_slip;
    cfg.algorithm = Algorithm::kTabularUcbCvi;
    cfg.horizon = opt.tabular_horizon;
    cfg.seeds = opt.tabular_seeds;
    const auto res = run_experiment(cfg);
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& d = res.diagnostics[i];
      detail::absorb(bonus, d.bonus_sum_bound - d.bonus_sum);
      const std::uint32_t need = kFlagSpanClip | kFlagMonotone | kFlagValueBounds | kFlagOrdering;
      detail::absorb(tab_clip, (res.rows[i].invariant_flags & need) == need ? d.worst_span_slack : -INFINITY,
                     TabularInvariantMonitor::kTol);
    }
  }
  report.entries.push_back(bonus);
  report.entries.push_back(tab_clip);

  LemmaEntry episodes{"episode-count", true, INFINITY, 0, "K <= d log2(1 + T/(lambda d))"};
  LemmaEntry weights{"weight-norm", true, INFINITY, 0, "||w|| <= H sqrt(d (t_k - 1)/lambda)"};
  LemmaEntry elliptical{"elliptical-potential", true, INFINITY, 0, "sum phi' Lbar_{t-1}^-1 phi <= 2 d ln(1+T)"};
  LemmaEntry fixed{"fixed-design-potential", true, INFINITY, 0, "sum phi' Lbar_T^-1 phi <= d"};
  LemmaEntry detcmp{"determinant-comparison", true, INFINITY, 0, "||phi||_{L_k^-1} <= sqrt(2) ||phi||_{Lbar^-1}"};
  LemmaEntry lin_clip{"linear-cap-clip", true, INFINITY, 0, "Q <= 1/(1-g), sp(V) <= H"};
  for (std::size_t d : opt.linear_dims)
    for (std::int64_t T : opt.linear_horizons) {
      if (opt.linear_seeds.empty()) continue;
      ExperimentConfig cfg;
      cfg.env.kind = EnvKind::kRandomLinear;
      cfg.env.dim = d;
      cfg.env.num_states = opt.linear_states;
      cfg.env.num_actions = opt.linear_actions;
      cfg.env.seed = 100 + d;
      cfg.algorithm = Algorithm::kLinearLscviUcb;
      cfg.horizon = T;
      cfg.seeds = opt.linear_seeds;
      const auto res = run_experiment(cfg);
      for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const auto& dg = res.diagnostics[i];
        detail::absorb(episodes, dg.episode_bound - static_cast<double>(res.rows[i].episode_count));
        detail::absorb(weights, dg.worst_weight_slack, LinearInvariantMonitor::kTol);
        detail::absorb(elliptical, dg.elliptical_bound - dg.elliptical_sum);
        detail::absorb(fixed, static_cast<double>(d) - dg.fixed_design_sum, 1e-6);
        detail::absorb(detcmp, dg.worst_det_comparison_slack, LinearInvariantMonitor::kTol);
        detail::absorb(lin_clip, std::min(dg.worst_cap_slack, dg.worst_span_slack), LinearInvariantMonitor::kTol);
      }
    }
  for (auto* e : {&episodes, &weights, &elliptical, &fixed, &detcmp, &lin_clip}) report.entries.push_back(*e);
  return report;
}

}  // namespace cvi
