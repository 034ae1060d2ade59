#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cvi/algo_config.hpp"
#include "cvi/mdp.hpp"
#include "cvi/oracle.hpp"
#include "cvi/rng.hpp"
#include "cvi/run_record.hpp"

namespace cvi {

/// Lowest-index maximizer of a row of action values.
inline ActionIndex argmax_lowest(std::span<const double> row) {
  ActionIndex best = 0;
  for (ActionIndex a = 1; a < row.size(); ++a)
    if (row[a] > row[best]) best = a;
  return best;
}

/// Optimistic clipped value iteration for a tabular MDP with known rewards.
///
/// Every observed transition triggers one optimistic backup over the full
/// (s, a) table, a monotone minimum with the previous estimate, and a span
/// clip of the state values at min + H. Counts start at one, so the bonus of
/// a pair visited n times is beta / sqrt(n + 1); its model is the empirical
/// next-state distribution of those n visits.
class TabularAgent {
 public:
  TabularAgent(const TabularMDP& mdp, AlgoConfig config)
      : rewards_(mdp.reward_data()), S_(mdp.num_states()), A_(mdp.num_actions()), config_(config) {
    config_.validate();
    const double cap = config_.value_cap();
    counts_.assign(S_ * A_, 1);
    triple_counts_.assign(S_ * A_ * S_, 0);
    p_hat_.assign(S_ * A_ * S_, 0.0);
    q_.assign(S_ * A_, cap);
    v_.assign(S_, cap);
    v_tilde_.assign(S_, cap);
  }

  ActionIndex act(StateIndex s) const { return argmax_lowest(q_row(s)); }

  void update(StateIndex s, ActionIndex a, StateIndex next) {
    const std::size_t sa = s * A_ + a;
    ++triple_counts_[sa * S_ + next];
    ++counts_[sa];
    // Only the visited row of the empirical model changes. N counts visits
    // plus one, so the empirical distribution divides by N - 1.
    const double visits = static_cast<double>(counts_[sa] - 1);
    for (std::size_t k = 0; k < S_; ++k)
      p_hat_[sa * S_ + k] = static_cast<double>(triple_counts_[sa * S_ + k]) / visits;

    const double gamma = config_.gamma;
    const double beta = config_.bonus_factor;
    for (std::size_t i = 0; i < S_ * A_; ++i) {
      // Unvisited pairs have no model yet and keep their optimistic value.
      if (counts_[i] == 1) continue;
      double pv = 0.0;
      for (std::size_t k = 0; k < S_; ++k) pv += p_hat_[i * S_ + k] * v_[k];
      const double backup = rewards_[i] + gamma * pv + beta / std::sqrt(static_cast<double>(counts_[i]));
      q_[i] = std::min(backup, q_[i]);
    }
    for (std::size_t x = 0; x < S_; ++x) {
      const auto row = q_row(x);
      v_tilde_[x] = std::min(*std::max_element(row.begin(), row.end()), v_[x]);
    }
    const double ceiling = min_of(v_tilde_) + config_.span_bound;
    for (std::size_t x = 0; x < S_; ++x) v_[x] = std::min(v_tilde_[x], ceiling);
  }

  std::span<const double> q_row(StateIndex s) const { return {q_.data() + s * A_, A_}; }
  const std::vector<double>& q() const { return q_; }
  const std::vector<double>& v() const { return v_; }
  const std::vector<double>& v_tilde() const { return v_tilde_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  const std::vector<std::int64_t>& triple_counts() const { return triple_counts_; }
  const std::vector<double>& p_hat() const { return p_hat_; }
  std::int64_t count(StateIndex s, ActionIndex a) const { return counts_[s * A_ + a]; }
  const AlgoConfig& config() const { return config_; }
  std::size_t num_states() const { return S_; }
  std::size_t num_actions() const { return A_; }

 private:
  std::vector<double> rewards_;
  std::size_t S_;
  std::size_t A_;
  AlgoConfig config_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> triple_counts_;
  std::vector<double> p_hat_;
  std::vector<double> q_;
  std::vector<double> v_;
  std::vector<double> v_tilde_;
};

/// Defaults: gamma = 1 - sqrt(1/T), H = 2 sp(v*),
/// beta = c H sqrt(S ln(S A T / delta)).
inline AlgoConfig default_tabular_config(std::size_t num_states, std::size_t num_actions, double sp_v_star,
                                         std::int64_t horizon, double delta = 0.1, double c = 2.0) {
  if (sp_v_star < 0.0) throw ConfigError("default_tabular_config: sp(v*) must be nonnegative");
  if (horizon < 1) throw InvalidHorizon("default_tabular_config: horizon must be >= 1");
  AlgoConfig cfg;
  const double T = static_cast<double>(horizon);
  const double S = static_cast<double>(num_states);
  const double A = static_cast<double>(num_actions);
  cfg.horizon = horizon;
  cfg.gamma = 1.0 - std::sqrt(1.0 / T);
  cfg.span_bound = 2.0 * sp_v_star;
  cfg.bonus_factor = c * cfg.span_bound * std::sqrt(S * std::log(S * A * T / delta));
  cfg.delta = delta;
  cfg.c_beta = c;
  return cfg;
}

/// Tracks the per-step invariants of a tabular run. Tolerances are absolute.
class TabularInvariantMonitor {
 public:
  static constexpr double kTol = 1e-9;

  TabularInvariantMonitor() = default;

  /// Enables the optimism check V_t >= V*, Q_t >= Q* against discounted oracle values.
  void set_optimism_reference(std::vector<double> v_star, std::vector<double> q_star) {
    ref_v_ = std::move(v_star);
    ref_q_ = std::move(q_star);
  }

  /// Called with the agent before acting at step t (1-based) and the pair it is about to update.
  void before_update(const TabularAgent& agent, StateIndex s, ActionIndex a) {
    bonus_sum_ += 1.0 / std::sqrt(static_cast<double>(agent.count(s, a)));
    prev_q_ = agent.q();
    prev_v_ = agent.v();
  }

  void after_update(const TabularAgent& agent) {
    ++steps_;
    const double cap = agent.config().value_cap();
    const double H = agent.config().span_bound;
    const auto& q = agent.q();
    const auto& v = agent.v();
    const auto& vt = agent.v_tilde();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (q[i] < -kTol || q[i] > cap + kTol) bounds_ok_ = false;
      if (q[i] > prev_q_[i]) monotone_ok_ = false;
    }
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (v[s] < -kTol || v[s] > cap + kTol) bounds_ok_ = false;
      if (v[s] > prev_v_[s]) monotone_ok_ = false;
      const auto row = agent.q_row(s);
      if (v[s] > vt[s] || vt[s] > *std::max_element(row.begin(), row.end())) ordering_ok_ = false;
    }
    worst_span_slack_ = std::min(worst_span_slack_, H - span(v));
    if (span(v) > H + kTol) span_ok_ = false;

    for (std::size_t i = 0; i < agent.counts().size(); ++i) {
      std::int64_t total = 0;
      for (std::size_t k = 0; k < agent.num_states(); ++k) total += agent.triple_counts()[i * agent.num_states() + k];
      if (total + 1 != agent.counts()[i]) model_ok_ = false;
    }

    if (!ref_v_.empty()) {
      for (std::size_t s = 0; s < v.size(); ++s) worst_optimism_ = std::min(worst_optimism_, v[s] - ref_v_[s]);
      for (std::size_t i = 0; i < q.size(); ++i) worst_optimism_ = std::min(worst_optimism_, q[i] - ref_q_[i]);
    }
  }

  double bonus_sum() const { return bonus_sum_; }
  double bonus_sum_bound(std::size_t S, std::size_t A) const {
    return 2.0 * std::sqrt(static_cast<double>(S * A) * static_cast<double>(steps_));
  }
  bool bounds_ok() const { return bounds_ok_; }
  bool monotone_ok() const { return monotone_ok_; }
  bool ordering_ok() const { return ordering_ok_; }
  bool span_ok() const { return span_ok_; }
  bool model_ok() const { return model_ok_; }
  double worst_span_slack() const { return worst_span_slack_; }
  bool has_optimism_reference() const { return !ref_v_.empty(); }
  /// min over steps and entries of (V_t - V*) and (Q_t - Q*).
  double worst_optimism() const { return worst_optimism_; }
  std::int64_t steps() const { return steps_; }

 private:
  std::vector<double> prev_q_;
  std::vector<double> prev_v_;
  std::vector<double> ref_v_;
  std::vector<double> ref_q_;
  double bonus_sum_ = 0.0;
  double worst_span_slack_ = INFINITY;
  double worst_optimism_ = INFINITY;
  std::int64_t steps_ = 0;
  bool bounds_ok_ = true;
  bool monotone_ok_ = true;
  bool ordering_ok_ = true;
  bool span_ok_ = true;
  bool model_ok_ = true;
};

/// Runs the agent for config.horizon steps against the true model, sampling
/// next states with one uniform draw per step from an Rng seeded by config.seed.
inline RunRecord run_tabular(const TabularMDP& mdp, const AlgoConfig& config,
                             TabularInvariantMonitor* monitor = nullptr) {
  const auto report = validate_tabular(mdp);
  if (!report.ok()) throw InvalidEnv("run_tabular: invalid MDP\n" + report.describe());
  TabularAgent agent(mdp, config);
  Rng rng(config.seed);
  RunRecord rec;
  const auto T = static_cast<std::size_t>(config.horizon);
  rec.states.reserve(T);
  rec.actions.reserve(T);
  rec.rewards.reserve(T);
  rec.episode_starts = {1};
  rec.episode_of_step.assign(T, 1);
  rec.episode_count = 1;

  StateIndex s = mdp.initial_state();
  for (std::size_t t = 0; t < T; ++t) {
    const ActionIndex a = agent.act(s);
    rec.states.push_back(s);
    rec.actions.push_back(a);
    rec.rewards.push_back(mdp.reward(s, a));
    const StateIndex next = rng.categorical(mdp.row(s, a));
    if (monitor) monitor->before_update(agent, s, a);
    agent.update(s, a, next);
    if (monitor) monitor->after_update(agent);
    s = next;
  }
  return rec;
}

}  // namespace cvi
