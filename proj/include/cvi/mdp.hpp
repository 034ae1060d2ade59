#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "cvi/errors.hpp"

namespace cvi {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

inline constexpr double kProbabilityTolerance = 1e-12;

/// Finite MDP with explicit transition tensor P(s'|s,a) and known reward table.
class TabularMDP {
 public:
  TabularMDP() = default;

  TabularMDP(std::size_t num_states, std::size_t num_actions, StateIndex initial_state = 0)
      : num_states_(num_states),
        num_actions_(num_actions),
        initial_state_(initial_state),
        transition_(num_states * num_actions * num_states, 0.0),
        reward_(num_states * num_actions, 0.0) {}

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  StateIndex initial_state() const { return initial_state_; }
  void set_initial_state(StateIndex s) { initial_state_ = s; }

  double& transition(StateIndex s, ActionIndex a, StateIndex next) {
    return transition_[(s * num_actions_ + a) * num_states_ + next];
  }
  double transition(StateIndex s, ActionIndex a, StateIndex next) const {
    return transition_[(s * num_actions_ + a) * num_states_ + next];
  }

  std::span<double> row(StateIndex s, ActionIndex a) {
    return {transition_.data() + (s * num_actions_ + a) * num_states_, num_states_};
  }
  std::span<const double> row(StateIndex s, ActionIndex a) const {
    return {transition_.data() + (s * num_actions_ + a) * num_states_, num_states_};
  }

  double& reward(StateIndex s, ActionIndex a) { return reward_[s * num_actions_ + a]; }
  double reward(StateIndex s, ActionIndex a) const { return reward_[s * num_actions_ + a]; }

  const std::vector<double>& transition_data() const { return transition_; }
  const std::vector<double>& reward_data() const { return reward_; }

  /// [P v](s, a).
  double expect(StateIndex s, ActionIndex a, std::span<const double> values) const {
    const auto p = row(s, a);
    double acc = 0.0;
    for (std::size_t k = 0; k < num_states_; ++k) acc += p[k] * values[k];
    return acc;
  }

  friend bool operator==(const TabularMDP&, const TabularMDP&) = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  StateIndex initial_state_ = 0;
  std::vector<double> transition_;
  std::vector<double> reward_;
};

/// Linear MDP over a finite state set: P(s'|s,a) = <phi(s,a), mu(s')>,
/// r(s,a) = <phi(s,a), theta>.
struct LinearMDPEnv {
  std::size_t num_states = 0;
  std::size_t num_actions = 0;
  StateIndex initial_state = 0;
  /// Row s * num_actions + a holds phi(s, a).
  Eigen::MatrixXd features;
  /// Row j holds the discrete measure mu_j over next states.
  Eigen::MatrixXd measures;
  Eigen::VectorXd theta;

  std::size_t dim() const { return static_cast<std::size_t>(theta.size()); }

  Eigen::VectorXd feature(StateIndex s, ActionIndex a) const {
    return features.row(static_cast<Eigen::Index>(s * num_actions + a)).transpose();
  }
};

struct Violation {
  std::string kind;
  std::vector<std::size_t> index;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  bool has(const std::string& kind) const {
    for (const auto& v : violations)
      if (v.kind == kind) return true;
    return false;
  }

  std::string describe() const {
    std::ostringstream out;
    for (const auto& v : violations) {
      out << v.kind << " at (";
      for (std::size_t i = 0; i < v.index.size(); ++i) out << (i ? "," : "") << v.index[i];
      out << ") magnitude " << v.magnitude << "\n";
    }
    return out.str();
  }
};

inline ValidationReport validate_tabular(const TabularMDP& mdp) {
  ValidationReport report;
  const auto S = mdp.num_states();
  const auto A = mdp.num_actions();
  if (S == 0 || A == 0) {
    report.violations.push_back({"empty-dimensions", {S, A}, 0.0});
    return report;
  }
  if (mdp.initial_state() >= S)
    report.violations.push_back({"initial-state", {mdp.initial_state()}, 0.0});
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      double sum = 0.0;
      for (std::size_t n = 0; n < S; ++n) {
        const double p = mdp.transition(s, a, n);
        if (!std::isfinite(p) || p < 0.0)
          report.violations.push_back({"negative-probability", {s, a, n}, std::isfinite(p) ? -p : INFINITY});
        sum += p;
      }
      if (!(std::abs(sum - 1.0) <= kProbabilityTolerance))
        report.violations.push_back({"row-sum", {s, a}, std::abs(sum - 1.0)});
      const double r = mdp.reward(s, a);
      if (!std::isfinite(r) || r < 0.0 || r > 1.0) {
        const double excess = !std::isfinite(r) ? INFINITY : (r < 0.0 ? -r : r - 1.0);
        report.violations.push_back({"reward-range", {s, a}, excess});
      }
    }
  }
  return report;
}

inline ValidationReport validate_linear(const LinearMDPEnv& env) {
  ValidationReport report;
  const auto S = env.num_states;
  const auto A = env.num_actions;
  const auto d = env.dim();
  if (S == 0 || A == 0 || d == 0) {
    report.violations.push_back({"empty-dimensions", {S, A, d}, 0.0});
    return report;
  }
  if (static_cast<std::size_t>(env.features.rows()) != S * A ||
      static_cast<std::size_t>(env.features.cols()) != d ||
      static_cast<std::size_t>(env.measures.rows()) != d ||
      static_cast<std::size_t>(env.measures.cols()) != S) {
    report.violations.push_back({"shape", {S, A, d}, 0.0});
    return report;
  }
  if (env.initial_state >= S) report.violations.push_back({"initial-state", {env.initial_state}, 0.0});

  const double sqrt_d = std::sqrt(static_cast<double>(d));
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const double norm = env.features.row(static_cast<Eigen::Index>(s * A + a)).norm();
      if (!(norm <= 1.0 + kProbabilityTolerance))
        report.violations.push_back({"feature-norm", {s, a}, norm - 1.0});
    }
  }
  const double theta_norm = env.theta.norm();
  if (!(theta_norm <= sqrt_d + kProbabilityTolerance))
    report.violations.push_back({"theta-norm", {}, theta_norm - sqrt_d});
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t n = 0; n < S; ++n) {
      const double m = env.measures(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(n));
      if (!(m >= 0.0)) report.violations.push_back({"negative-measure", {j, n}, -m});
    }
  const double mass_norm = env.measures.rowwise().sum().norm();
  if (!(mass_norm <= sqrt_d + kProbabilityTolerance))
    report.violations.push_back({"measure-mass-norm", {}, mass_norm - sqrt_d});

  // Reconstructed model must itself be a valid tabular MDP.
  const Eigen::MatrixXd P = env.features * env.measures;
  const Eigen::VectorXd r = env.features * env.theta;
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto i = static_cast<Eigen::Index>(s * A + a);
      double sum = 0.0;
      for (std::size_t n = 0; n < S; ++n) {
        const double p = P(i, static_cast<Eigen::Index>(n));
        if (p < -kProbabilityTolerance) report.violations.push_back({"reconstructed-negative", {s, a, n}, -p});
        sum += p;
      }
      if (!(std::abs(sum - 1.0) <= kProbabilityTolerance))
        report.violations.push_back({"reconstructed-row-sum", {s, a}, std::abs(sum - 1.0)});
      if (!(r(i) >= -kProbabilityTolerance && r(i) <= 1.0 + kProbabilityTolerance))
        report.violations.push_back({"reconstructed-reward", {s, a}, r(i) < 0.0 ? -r(i) : r(i) - 1.0});
    }
  }
  return report;
}

/// Materializes the tabular model a linear MDP induces on its finite state set.
inline TabularMDP linear_to_tabular(const LinearMDPEnv& env) {
  const auto S = env.num_states;
  const auto A = env.num_actions;
  TabularMDP mdp(S, A, env.initial_state);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < A; ++a) {
      const auto i = static_cast<Eigen::Index>(s * A + a);
      const auto phi = env.features.row(i);
      for (std::size_t n = 0; n < S; ++n) {
        double p = phi.dot(env.measures.col(static_cast<Eigen::Index>(n)));
        if (p < -kProbabilityTolerance) {
          std::ostringstream msg;
          msg << "reconstructed P(" << n << "|" << s << "," << a << ") = " << p << " is negative";
          throw InvalidEnv(msg.str());
        }
        // Rounding noise around zero.
        if (p < 0.0) p = 0.0;
        mdp.transition(s, a, n) = p;
      }
      mdp.reward(s, a) = phi.dot(env.theta);
    }
  }
  return mdp;
}

/// One-hot embedding: d = S * A, phi(s,a) = e_{(s,a)}, mu_{(s,a)} = P(.|s,a), theta_{(s,a)} = r(s,a).
inline LinearMDPEnv tabular_to_onehot_linear(const TabularMDP& mdp) {
  const auto S = mdp.num_states();
  const auto A = mdp.num_actions();
  const auto d = static_cast<Eigen::Index>(S * A);
  LinearMDPEnv env;
  env.num_states = S;
  env.num_actions = A;
  env.initial_state = mdp.initial_state();
  env.features = Eigen::MatrixXd::Identity(d, d);
  env.measures = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(S));
  env.theta = Eigen::VectorXd::Zero(d);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t a = 0; a < A; ++a) {
      const auto j = static_cast<Eigen::Index>(s * A + a);
      for (std::size_t n = 0; n < S; ++n) env.measures(j, static_cast<Eigen::Index>(n)) = mdp.transition(s, a, n);
      env.theta(j) = mdp.reward(s, a);
    }
  return env;
}

}  // namespace cvi
