#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "cvi/errors.hpp"
#include "cvi/mdp.hpp"
#include "cvi/run_record.hpp"

namespace cvi {

inline constexpr double kDefaultOracleTolerance = 1e-10;
inline constexpr std::int64_t kOracleIterationCap = 10'000'000;

inline double span(std::span<const double> v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

inline double min_of(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }
inline double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

struct DiscountedSolution {
  double gamma = 0.0;
  std::vector<double> v;  // V*(s)
  std::vector<double> q;  // Q*(s, a), row-major in (s, a)
  std::int64_t iterations = 0;
};

struct AverageRewardSolution {
  double j_star = 0.0;
  std::vector<double> v;  // bias v*, normalized so min_s v*(s) = 0
  std::vector<double> q;  // q*(s, a)
  double span_v = 0.0;
  double bellman_residual = 0.0;
  std::int64_t iterations = 0;
};

/// Bundled oracle output used for regret accounting and lemma checks.
struct OracleSolution {
  double j_star = 0.0;
  std::vector<double> v_star;
  std::vector<double> q_star;
  double span_v_star = 0.0;
  std::vector<double> discounted_v_star;
  std::vector<double> discounted_q_star;
  double gamma_used = 0.0;
};

namespace detail {

inline double bellman_residual(const TabularMDP& mdp, double gamma, const std::vector<double>& v) {
  double worst = 0.0;
  for (std::size_t s = 0; s < mdp.num_states(); ++s) {
    double best = -INFINITY;
    for (std::size_t a = 0; a < mdp.num_actions(); ++a)
      best = std::max(best, mdp.reward(s, a) + gamma * mdp.expect(s, a, v));
    worst = std::max(worst, std::abs(best - v[s]));
  }
  return worst;
}

}  // namespace detail

/// Replaces v by the exact value of its greedy policy when that lowers the
/// Bellman residual. Value iteration from zero approaches V* from one side;
/// the linear solve removes that remaining bias.
inline void polish_with_policy_evaluation(const TabularMDP& mdp, double gamma, std::vector<double>& v) {
  const auto S = mdp.num_states();
  const auto A = mdp.num_actions();
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(S));
  for (std::size_t s = 0; s < S; ++s) {
    std::size_t best_a = 0;
    double best = -INFINITY;
    for (std::size_t a = 0; a < A; ++a) {
      const double q = mdp.reward(s, a) + gamma * mdp.expect(s, a, v);
      if (q > best) {
        best = q;
        best_a = a;
      }
    }
    const auto i = static_cast<Eigen::Index>(s);
    for (std::size_t n = 0; n < S; ++n) system(i, static_cast<Eigen::Index>(n)) -= gamma * mdp.transition(s, best_a, n);
    rhs(i) = mdp.reward(s, best_a);
  }
  const Eigen::VectorXd exact = system.partialPivLu().solve(rhs);
  std::vector<double> candidate(exact.data(), exact.data() + S);
  if (detail::bellman_residual(mdp, gamma, candidate) <= detail::bellman_residual(mdp, gamma, v)) v.swap(candidate);
}

/// Discounted value iteration from V = 0.
///
/// Stops once successive iterates are within tol * (1 - gamma) / gamma in sup
/// norm, which puts the returned V within tol of the fixed point. The threshold
/// is floored at a few ulps of max |V| since rounding stops the iteration from
/// contracting further. The result is then polished by one exact evaluation
/// of the greedy policy.
inline DiscountedSolution solve_discounted(const TabularMDP& mdp, double gamma,
                                           double tol = kDefaultOracleTolerance) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("solve_discounted: gamma must lie in [0,1)");
  const auto S = mdp.num_states();
  const auto A = mdp.num_actions();
  DiscountedSolution sol;
  sol.gamma = gamma;
  sol.v.assign(S, 0.0);
  sol.q.assign(S * A, 0.0);
  std::vector<double> next(S, 0.0);

  const double stop = gamma > 0.0 ? tol * (1.0 - gamma) / gamma : INFINITY;
  for (std::int64_t it = 1; it <= kOracleIterationCap; ++it) {
    double gap = 0.0;
    double scale = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      double best = -INFINITY;
      for (std::size_t a = 0; a < A; ++a) {
        const double q = mdp.reward(s, a) + gamma * mdp.expect(s, a, sol.v);
        sol.q[s * A + a] = q;
        best = std::max(best, q);
      }
      next[s] = best;
      gap = std::max(gap, std::abs(best - sol.v[s]));
      scale = std::max(scale, std::abs(best));
    }
    sol.v.swap(next);
    sol.iterations = it;
    const double floor = 32.0 * std::numeric_limits<double>::epsilon() * scale;
    if (gap <= std::max(stop, floor)) {
      polish_with_policy_evaluation(mdp, gamma, sol.v);
      // Q consistent with the returned V; V*(s) = max_a Q*(s, a) exactly.
      for (std::size_t s = 0; s < S; ++s) {
        double best = -INFINITY;
        for (std::size_t a = 0; a < A; ++a) {
          sol.q[s * A + a] = mdp.reward(s, a) + gamma * mdp.expect(s, a, sol.v);
          best = std::max(best, sol.q[s * A + a]);
        }
        next[s] = best;
      }
      sol.v.swap(next);
      return sol;
    }
  }
  throw NonConvergence("solve_discounted: iteration cap reached");
}

/// Relative value iteration (reference state 0) for J*, the bias v* and q*.
///
/// Iterates on the aperiodic transform P' = (P + I) / 2, which has the same
/// optimal gain and bias 2 v*, so periodic optimal policies do not stall the
/// span stopping rule. Bellman residuals of the original and transformed
/// problems coincide.
inline AverageRewardSolution solve_average_reward(const TabularMDP& mdp,
                                                  double tol = kDefaultOracleTolerance) {
  constexpr double kAperiodicity = 0.5;
  const auto S = mdp.num_states();
  const auto A = mdp.num_actions();
  std::vector<double> h(S, 0.0);
  std::vector<double> th(S, 0.0);
  AverageRewardSolution sol;

  auto transformed_backup = [&](std::size_t s, std::size_t a, std::span<const double> values) {
    return mdp.reward(s, a) + kAperiodicity * mdp.expect(s, a, values) + (1.0 - kAperiodicity) * values[s];
  };

  double gain = 0.0;
  bool converged = false;
  for (std::int64_t it = 1; it <= kOracleIterationCap; ++it) {
    double lo = INFINITY;
    double hi = -INFINITY;
    double scale = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      double best = -INFINITY;
      for (std::size_t a = 0; a < A; ++a) best = std::max(best, transformed_backup(s, a, h));
      th[s] = best;
      lo = std::min(lo, best - h[s]);
      hi = std::max(hi, best - h[s]);
      scale = std::max(scale, std::abs(best));
    }
    gain = 0.5 * (lo + hi);
    const double ref = th[0];
    for (std::size_t s = 0; s < S; ++s) h[s] = th[s] - ref;
    sol.iterations = it;
    const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, scale);
    if (hi - lo <= std::max(tol, floor)) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NonConvergence("solve_average_reward: relative value iteration did not meet the span criterion");

  sol.j_star = gain;
  std::vector<double> v(S);
  for (std::size_t s = 0; s < S; ++s) v[s] = kAperiodicity * h[s];
  sol.q.assign(S * A, 0.0);
  sol.v.assign(S, -INFINITY);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      sol.q[s * A + a] = mdp.reward(s, a) + mdp.expect(s, a, v) - gain;
      sol.v[s] = std::max(sol.v[s], sol.q[s * A + a]);
    }
  const double shift = min_of(sol.v);
  for (auto& x : sol.v) x -= shift;
  for (auto& x : sol.q) x -= shift;
  sol.span_v = max_of(sol.v);

  double residual = 0.0;
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a)
      residual = std::max(residual, std::abs(gain + sol.q[s * A + a] - mdp.reward(s, a) - mdp.expect(s, a, sol.v)));
  sol.bellman_residual = residual;
  return sol;
}

inline OracleSolution solve_oracle(const TabularMDP& mdp, double gamma, double tol = kDefaultOracleTolerance) {
  const auto avg = solve_average_reward(mdp, tol);
  const auto disc = solve_discounted(mdp, gamma, tol);
  OracleSolution out;
  out.j_star = avg.j_star;
  out.v_star = avg.v;
  out.q_star = avg.q;
  out.span_v_star = avg.span_v;
  out.discounted_v_star = disc.v;
  out.discounted_q_star = disc.q;
  out.gamma_used = gamma;
  return out;
}

struct DiscountedApproxReport {
  double span_ratio_slack = 0.0;  // 2 sp(v*) - sp(V*)
  double j_gap_slack = 0.0;       // (1 - gamma) sp(v*) - max_s |(1 - gamma) V*(s) - J*|
  double span_v_star = 0.0;
  double span_discounted = 0.0;
  bool pass = false;
};

/// Checks the two discounted-approximation inequalities relating V* to (J*, v*).
inline DiscountedApproxReport check_discounted_approx(const TabularMDP& mdp, double gamma,
                                                      double tol = 1e-8) {
  const auto avg = solve_average_reward(mdp);
  const auto disc = solve_discounted(mdp, gamma);
  DiscountedApproxReport rep;
  rep.span_v_star = avg.span_v;
  rep.span_discounted = span(disc.v);
  rep.span_ratio_slack = 2.0 * avg.span_v - rep.span_discounted;
  double worst = 0.0;
  for (double value : disc.v) worst = std::max(worst, std::abs((1.0 - gamma) * value - avg.j_star));
  rep.j_gap_slack = (1.0 - gamma) * avg.span_v - worst;
  rep.pass = rep.span_ratio_slack >= -tol && rep.j_gap_slack >= -tol;
  return rep;
}

/// Cumulative regret sum_{tau <= t} (J* - r_tau), one entry per step.
inline std::vector<double> regret_series(std::span<const double> rewards, double j_star) {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    acc += j_star - rewards[i];
    out[i] = acc;
  }
  return out;
}

/// Fills record.regret_series against j_star and returns R_T.
inline double regret_of(RunRecord& record, double j_star) {
  record.j_star = j_star;
  record.regret_series = regret_series(record.rewards, j_star);
  return record.final_regret();
}

}  // namespace cvi
