#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "cvi/algo_config.hpp"
#include "cvi/covariance.hpp"
#include "cvi/mdp.hpp"
#include "cvi/oracle.hpp"
#include "cvi/rng.hpp"
#include "cvi/run_record.hpp"
#include "cvi/tabular_agent.hpp"

namespace cvi {

/// Admissible interval for regression targets; violations mean the clipping step upstream is broken.
struct TargetRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  static constexpr double kSlack = 1e-9;
  bool contains(double y) const { return y >= lo - kSlack && y <= hi + kSlack; }
};

struct RegressionSample {
  Eigen::VectorXd phi;
  double target = 0.0;
};

inline void check_target(double y, const TargetRange& range) {
  if (!range.contains(y)) {
    std::ostringstream msg;
    msg << "ridge_regress: target " << y << " outside [" << range.lo << ", " << range.hi << "]";
    throw InvariantViolation(msg.str());
  }
}

/// w = Lambda_k^{-1} sum_i phi_i y_i against the frozen episode matrix.
inline Eigen::VectorXd ridge_regress(const CovarianceState& cov, std::span<const RegressionSample> history,
                                     const TargetRange& range = {}) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(cov.dim());
  for (const auto& sample : history) {
    check_target(sample.target, range);
    rhs.noalias() += sample.phi * sample.target;
  }
  return cov.inv_episode() * rhs;
}

/// Sufficient statistics of a transition history for regressing V(s_{tau+1}) - m
/// on phi(s_tau, a_tau) over a finite state set.
struct RegressionData {
  Eigen::MatrixXd phi_by_next;  // d x S; column s' sums phi over samples landing in s'
  Eigen::VectorXd phi_total;
  std::vector<std::int64_t> next_count;
  std::int64_t size = 0;

  RegressionData() = default;
  RegressionData(Eigen::Index dim, std::size_t num_states)
      : phi_by_next(Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(num_states))),
        phi_total(Eigen::VectorXd::Zero(dim)),
        next_count(num_states, 0) {}

  void add(const Eigen::VectorXd& phi, StateIndex next) {
    phi_by_next.col(static_cast<Eigen::Index>(next)) += phi;
    phi_total += phi;
    ++next_count[next];
    ++size;
  }
};

struct RegressionResult {
  Eigen::VectorXd w;
  double max_abs_target = 0.0;
};

/// Same estimator as the sample form, with targets values[s'] - offset
/// aggregated by next state.
inline RegressionResult ridge_regress(const CovarianceState& cov, const RegressionData& data,
                                      std::span<const double> values, double offset, const TargetRange& range = {}) {
  RegressionResult out;
  Eigen::VectorXd shifted(static_cast<Eigen::Index>(values.size()));
  for (std::size_t s = 0; s < values.size(); ++s) {
    const double y = values[s] - offset;
    shifted(static_cast<Eigen::Index>(s)) = y;
    if (data.next_count[s] > 0) {
      check_target(y, range);
      out.max_abs_target = std::max(out.max_abs_target, std::abs(y));
    }
  }
  const Eigen::VectorXd rhs = data.phi_by_next * shifted;
  out.w = cov.inv_episode() * rhs;
  return out;
}

/// Action values, clipped state values and regression weights for one episode,
/// materialized for every remaining step u = t_k .. T.
struct EpisodePlan {
  std::int64_t episode_index = 1;
  std::int64_t start_time = 1;
  std::int64_t horizon = 1;
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  /// Entry u - t_k holds w_{u+1} and m_{u+1}, the weight and offset used to build Q_u.
  std::vector<Eigen::VectorXd> weights;
  std::vector<double> offsets;
  std::vector<double> max_abs_targets;
  std::vector<double> q_tables;
  std::vector<double> v_tables;
  std::vector<double> v_tilde_tables;

  std::size_t steps() const { return static_cast<std::size_t>(horizon - start_time + 1); }

  std::span<const double> q_table(std::int64_t u) const {
    const auto i = static_cast<std::size_t>(u - start_time);
    return {q_tables.data() + i * num_states * num_actions, num_states * num_actions};
  }
  std::span<const double> q_row(std::int64_t u, StateIndex s) const {
    return q_table(u).subspan(s * num_actions, num_actions);
  }
  std::span<const double> v_table(std::int64_t u) const {
    const auto i = static_cast<std::size_t>(u - start_time);
    return {v_tables.data() + i * num_states, num_states};
  }
  std::span<const double> v_tilde_table(std::int64_t u) const {
    const auto i = static_cast<std::size_t>(u - start_time);
    return {v_tilde_tables.data() + i * num_states, num_states};
  }
};

/// First-episode plan: every action value starts at the cap 1 / (1 - gamma).
inline EpisodePlan initial_plan(const LinearMDPEnv& env, const AlgoConfig& config) {
  EpisodePlan plan;
  plan.horizon = config.horizon;
  plan.num_states = env.num_states;
  plan.num_actions = env.num_actions;
  const auto n = plan.steps();
  const double cap = config.value_cap();
  plan.weights.assign(n, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(env.dim())));
  plan.offsets.assign(n, cap);
  plan.max_abs_targets.assign(n, 0.0);
  plan.q_tables.assign(n * env.num_states * env.num_actions, cap);
  plan.v_tables.assign(n * env.num_states, cap);
  plan.v_tilde_tables.assign(n * env.num_states, cap);
  return plan;
}

/// Backward least-squares clipped value iteration from u = T down to t_k.
///
/// The covariance state must already be frozen for the episode. In
/// kMinOfVStar mode the oracle value min_s V*(s) replaces min_s Vtilde as the
/// regression offset and as the clipping anchor.
inline EpisodePlan plan_episode(const LinearMDPEnv& env, const CovarianceState& cov, const RegressionData& data,
                                const AlgoConfig& config, std::int64_t episode_index, std::int64_t start_time) {
  if (start_time < 1 || start_time > config.horizon)
    throw ConfigError("plan_episode: start time must lie in [1, T]");
  const bool vstar_anchor = config.clip_mode == ClipMode::kMinOfVStar;
  if (vstar_anchor && !config.min_v_star) throw ConfigError("plan_episode: min_of_vstar needs min_v_star");

  const auto S = env.num_states;
  const auto A = env.num_actions;
  const double cap = config.value_cap();
  const double gamma = config.gamma;
  const double H = config.span_bound;
  const TargetRange range = vstar_anchor ? TargetRange{} : TargetRange{0.0, H};

  EpisodePlan plan;
  plan.episode_index = episode_index;
  plan.start_time = start_time;
  plan.horizon = config.horizon;
  plan.num_states = S;
  plan.num_actions = A;
  const auto n = plan.steps();
  plan.weights.resize(n);
  plan.offsets.resize(n);
  plan.max_abs_targets.resize(n);
  plan.q_tables.resize(n * S * A);
  plan.v_tables.resize(n * S);
  plan.v_tilde_tables.resize(n * S);

  const auto SA = static_cast<Eigen::Index>(S * A);
  Eigen::VectorXd reward(SA);
  Eigen::VectorXd bonus(SA);
  for (Eigen::Index i = 0; i < SA; ++i) {
    const Eigen::VectorXd phi = env.features.row(i).transpose();
    reward(i) = phi.dot(env.theta);
    bonus(i) = config.bonus_factor * std::sqrt(cov.episode_quadratic(phi));
  }

  std::vector<double> v_next(S, cap);
  std::vector<double> v_tilde_next(S, cap);
  for (std::int64_t u = config.horizon; u >= start_time; --u) {
    const auto idx = static_cast<std::size_t>(u - start_time);
    const double offset = vstar_anchor ? *config.min_v_star : min_of(v_tilde_next);
    auto fit = ridge_regress(cov, data, v_next, offset, range);
    const Eigen::VectorXd projected = env.features * fit.w;

    double* q = plan.q_tables.data() + idx * S * A;
    double* vt = plan.v_tilde_tables.data() + idx * S;
    double* v = plan.v_tables.data() + idx * S;
    for (std::size_t s = 0; s < S; ++s) {
      double best = -INFINITY;
      for (std::size_t a = 0; a < A; ++a) {
        const auto i = static_cast<Eigen::Index>(s * A + a);
        const double value = std::min(reward(i) + gamma * (projected(i) + offset + bonus(i)), cap);
        q[s * A + a] = value;
        best = std::max(best, value);
      }
      vt[s] = best;
    }
    const double anchor = vstar_anchor ? *config.min_v_star : *std::min_element(vt, vt + S);
    for (std::size_t s = 0; s < S; ++s) v[s] = std::min(vt[s], anchor + H);

    plan.weights[idx] = std::move(fit.w);
    plan.offsets[idx] = offset;
    plan.max_abs_targets[idx] = fit.max_abs_target;
    std::copy(v, v + S, v_next.begin());
    std::copy(vt, vt + S, v_tilde_next.begin());
  }
  return plan;
}

inline ActionIndex act_linear(const EpisodePlan& plan, std::int64_t t, StateIndex s) {
  return argmax_lowest(plan.q_row(t, s));
}

/// gamma = 1 - sqrt(ln T / T), lambda = 1, H = 2 sp(v*), beta = 2 c_beta sp(v*) d sqrt(ln(d T / delta)).
inline AlgoConfig default_linear_config(std::size_t dim, double sp_v_star, std::int64_t horizon, double delta = 0.1,
                                        double c_beta = 1.0) {
  if (horizon < 3) throw InvalidHorizon("default_linear_config: horizon must be >= 3");
  if (sp_v_star < 0.0) throw ConfigError("default_linear_config: sp(v*) must be nonnegative");
  const double T = static_cast<double>(horizon);
  const double d = static_cast<double>(dim);
  AlgoConfig cfg;
  cfg.horizon = horizon;
  cfg.gamma = 1.0 - std::sqrt(std::log(T) / T);
  if (!(cfg.gamma >= 0.0 && cfg.gamma < 1.0)) throw InvalidHorizon("default_linear_config: gamma out of range");
  cfg.lambda = 1.0;
  cfg.span_bound = 2.0 * sp_v_star;
  cfg.bonus_factor = 2.0 * c_beta * sp_v_star * d * std::sqrt(std::log(d * T / delta));
  cfg.delta = delta;
  cfg.c_beta = c_beta;
  return cfg;
}

/// Episode-count bound d log2(1 + T / (lambda d)).
inline double episode_count_bound(std::size_t dim, std::int64_t horizon, double lambda) {
  const double d = static_cast<double>(dim);
  return d * std::log2(1.0 + static_cast<double>(horizon) / (lambda * d));
}

/// Collects in-line invariant checks for a linear run.
class LinearInvariantMonitor {
 public:
  static constexpr double kTol = 1e-9;

  void set_optimism_reference(std::vector<double> v_star) { ref_v_ = std::move(v_star); }

  void on_plan(const EpisodePlan& plan, const CovarianceState& cov, const AlgoConfig& config,
               std::int64_t history_size) {
    ++plans_;
    const double cap = config.value_cap();
    const double H = config.span_bound;
    const double d = static_cast<double>(cov.dim());
    const double root = std::sqrt(d * static_cast<double>(history_size) / config.lambda);
    const bool vstar_anchor = config.clip_mode == ClipMode::kMinOfVStar;
    const auto S = plan.num_states;
    const auto A = plan.num_actions;
    for (std::int64_t u = plan.start_time; u <= plan.horizon; ++u) {
      const auto idx = static_cast<std::size_t>(u - plan.start_time);
      const auto q = plan.q_table(u);
      const auto v = plan.v_table(u);
      const auto vt = plan.v_tilde_table(u);
      for (double x : q) {
        worst_cap_slack_ = std::min(worst_cap_slack_, cap - x);
        if (x < -kTol) q_nonnegative_ok_ = false;
      }
      const double sp = span(v);
      worst_span_slack_ = std::min(worst_span_slack_, H - sp);
      for (std::size_t s = 0; s < S; ++s) {
        const auto row = q.subspan(s * A, A);
        if (v[s] > vt[s] || vt[s] != *std::max_element(row.begin(), row.end())) ordering_ok_ = false;
      }
      const double norm = plan.weights[idx].norm();
      const double bound = (vstar_anchor ? plan.max_abs_targets[idx] : H) * root;
      worst_weight_slack_ = std::min(worst_weight_slack_, bound - norm);
      if (!ref_v_.empty())
        for (std::size_t s = 0; s < S; ++s) worst_optimism_ = std::min(worst_optimism_, v[s] - ref_v_[s]);
    }
  }

  /// Called before the rank-one update of step t with that step's feature.
  void on_step(const CovarianceState& cov, const Eigen::VectorXd& phi) {
    const double running = cov.running_quadratic(phi);
    elliptical_sum_ += running;
    const double ratio = cov.det_bar() / cov.det_episode();
    worst_det_ratio_ = std::max(worst_det_ratio_, ratio);
    const double lhs = std::sqrt(cov.episode_quadratic(phi));
    const double rhs = std::sqrt(running) * std::sqrt(std::max(ratio, 1.0));
    const double rhs_doubling = std::sqrt(running) * std::sqrt(2.0);
    worst_det_comparison_slack_ = std::min(worst_det_comparison_slack_, std::min(rhs, rhs_doubling) - lhs);
    phis_.push_back(phi);
  }

  void on_finish(const CovarianceState& cov, std::int64_t episode_count, std::int64_t horizon) {
    const auto d = static_cast<std::size_t>(cov.dim());
    episode_count_ = episode_count;
    episode_bound_ = episode_count_bound(d, horizon, cov.lambda());
    if (cov.lambda() >= 1.0) {
      elliptical_bound_ = 2.0 * static_cast<double>(d) * std::log(1.0 + static_cast<double>(horizon) / cov.lambda());
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(cov.lambda_bar());
    fixed_design_sum_ = 0.0;
    for (const auto& phi : phis_) fixed_design_sum_ += phi.dot(llt.solve(phi));
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    double det = 1.0;
    for (Eigen::Index i = 0; i < diag.size(); ++i) det *= diag(i) * diag(i);
    det_relative_error_ = std::abs(cov.det_bar() - det) / det;
  }

  bool cap_ok() const { return worst_cap_slack_ >= -kTol; }
  bool span_ok() const { return worst_span_slack_ >= -kTol; }
  bool q_nonnegative_ok() const { return q_nonnegative_ok_; }
  bool ordering_ok() const { return ordering_ok_; }
  bool weight_norm_ok() const { return worst_weight_slack_ >= -kTol; }
  bool episode_count_ok() const { return static_cast<double>(episode_count_) <= episode_bound_; }
  bool elliptical_applicable() const { return std::isfinite(elliptical_bound_); }
  bool elliptical_ok() const { return !elliptical_applicable() || elliptical_sum_ <= elliptical_bound_; }
  bool fixed_design_ok() const { return fixed_design_sum_ <= static_cast<double>(phis_.empty() ? 0 : phis_.front().size()) + 1e-6; }
  bool det_comparison_ok() const { return worst_det_comparison_slack_ >= -kTol && worst_det_ratio_ <= 2.0 * (1.0 + 1e-12); }
  bool det_tracking_ok() const { return det_relative_error_ <= 1e-8; }

  double worst_cap_slack() const { return worst_cap_slack_; }
  double worst_span_slack() const { return worst_span_slack_; }
  double worst_weight_slack() const { return worst_weight_slack_; }
  double worst_optimism() const { return worst_optimism_; }
  double worst_det_comparison_slack() const { return worst_det_comparison_slack_; }
  double elliptical_sum() const { return elliptical_sum_; }
  double elliptical_bound() const { return elliptical_bound_; }
  double fixed_design_sum() const { return fixed_design_sum_; }
  double det_relative_error() const { return det_relative_error_; }
  std::int64_t episode_count() const { return episode_count_; }
  double episode_bound() const { return episode_bound_; }
  std::int64_t plans() const { return plans_; }

 private:
  std::vector<double> ref_v_;
  std::vector<Eigen::VectorXd> phis_;
  double worst_cap_slack_ = INFINITY;
  double worst_span_slack_ = INFINITY;
  double worst_weight_slack_ = INFINITY;
  double worst_optimism_ = INFINITY;
  double worst_det_comparison_slack_ = INFINITY;
  double worst_det_ratio_ = 1.0;
  double elliptical_sum_ = 0.0;
  double elliptical_bound_ = INFINITY;
  double fixed_design_sum_ = 0.0;
  double det_relative_error_ = 0.0;
  double episode_bound_ = 0.0;
  std::int64_t episode_count_ = 0;
  std::int64_t plans_ = 0;
  bool q_nonnegative_ok_ = true;
  bool ordering_ok_ = true;
};

/// Full interaction loop: act from the current plan, sample the next state from
/// the reconstructed model, update the running covariance and re-plan from
/// t + 1 whenever its determinant exceeds twice the episode determinant.
inline RunRecord run_linear(const LinearMDPEnv& env, const AlgoConfig& config,
                            LinearInvariantMonitor* monitor = nullptr) {
  const auto report = validate_linear(env);
  if (!report.ok()) throw InvalidEnv("run_linear: invalid environment\n" + report.describe());
  config.validate();
  const TabularMDP mdp = linear_to_tabular(env);
  const auto d = static_cast<Eigen::Index>(env.dim());
  const auto T = config.horizon;

  Rng rng(config.seed);
  CovarianceState cov(d, config.lambda);
  RegressionData data(d, env.num_states);
  EpisodePlan plan = initial_plan(env, config);
  if (monitor) monitor->on_plan(plan, cov, config, 0);

  RunRecord rec;
  rec.states.reserve(static_cast<std::size_t>(T));
  rec.actions.reserve(static_cast<std::size_t>(T));
  rec.rewards.reserve(static_cast<std::size_t>(T));
  rec.episode_of_step.reserve(static_cast<std::size_t>(T));
  rec.episode_starts = {1};
  std::int64_t k = 1;

  StateIndex s = env.initial_state;
  for (std::int64_t t = 1; t <= T; ++t) {
    const ActionIndex a = act_linear(plan, t, s);
    rec.states.push_back(s);
    rec.actions.push_back(a);
    rec.rewards.push_back(mdp.reward(s, a));
    rec.episode_of_step.push_back(k);
    const StateIndex next = rng.categorical(mdp.row(s, a));

    const Eigen::VectorXd phi = env.feature(s, a);
    if (monitor) monitor->on_step(cov, phi);
    cov.rank_one_update(phi);
    data.add(phi, next);

    if (cov.should_advance_episode()) {
      ++k;
      cov.begin_episode();
      const std::int64_t start = t + 1;
      if (start <= T) {
        plan = plan_episode(env, cov, data, config, k, start);
        rec.episode_starts.push_back(start);
        if (monitor) monitor->on_plan(plan, cov, config, data.size);
      }
    }
    s = next;
  }
  rec.episode_count = k;
  if (monitor) monitor->on_finish(cov, k, T);
  return rec;
}

}  // namespace cvi
