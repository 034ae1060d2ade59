#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cvi/errors.hpp"
#include "cvi/mdp.hpp"
#include "cvi/rng.hpp"

namespace cvi {

enum class EnvKind { kChain, kRandomTabular, kRandomLinear, kOnehotOfTabular };

inline std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kChain: return "chain";
    case EnvKind::kRandomTabular: return "random_tabular";
    case EnvKind::kRandomLinear: return "random_linear";
    case EnvKind::kOnehotOfTabular: return "onehot_of_tabular";
  }
  return "?";
}

inline EnvKind env_kind_from_string(const std::string& text) {
  if (text == "chain") return EnvKind::kChain;
  if (text == "random_tabular") return EnvKind::kRandomTabular;
  if (text == "random_linear") return EnvKind::kRandomLinear;
  if (text == "onehot_of_tabular") return EnvKind::kOnehotOfTabular;
  throw ConfigError("unknown env kind '" + text + "'");
}

/// Generator description. For kOnehotOfTabular, `base` selects which tabular
/// generator (chain or random_tabular) is embedded.
struct EnvSpec {
  EnvKind kind = EnvKind::kChain;
  EnvKind base = EnvKind::kChain;
  std::size_t num_states = 2;
  std::size_t num_actions = 2;
  std::size_t dim = 1;
  std::uint64_t seed = 0;
  double slip = 0.0;
  double concentration = 1.0;

  void validate() const {
    if (num_states == 0 || num_actions == 0 || dim == 0) throw ConfigError("EnvSpec: sizes must be positive");
    if (!(slip >= 0.0 && slip <= 1.0)) throw ConfigError("EnvSpec: slip must lie in [0,1]");
    if (!(concentration > 0.0)) throw ConfigError("EnvSpec: concentration must be positive");
    if (kind == EnvKind::kOnehotOfTabular && base != EnvKind::kChain && base != EnvKind::kRandomTabular)
      throw ConfigError("EnvSpec: onehot base must be chain or random_tabular");
  }
};

inline constexpr ActionIndex kChainLeft = 0;
inline constexpr ActionIndex kChainRight = 1;

/// River-swim style chain with actions LEFT (0) and RIGHT (1).
///
/// LEFT moves one state toward 0 deterministically. RIGHT moves one state
/// toward S - 1 with probability 1 - slip and is pushed one state back
/// otherwise (positions clamp at both ends). Reward 1 at (S - 1, RIGHT),
/// 0.05 at (0, LEFT), zero elsewhere.
inline TabularMDP make_chain(std::size_t num_states, double slip) {
  if (num_states < 2) throw ConfigError("make_chain: need at least 2 states");
  if (!(slip >= 0.0 && slip <= 0.5)) throw ConfigError("make_chain: slip must lie in [0, 0.5]");
  const std::size_t S = num_states;
  TabularMDP mdp(S, 2, 0);
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t left = s == 0 ? 0 : s - 1;
    const std::size_t right = s + 1 < S ? s + 1 : S - 1;
    mdp.transition(s, kChainLeft, left) = 1.0;
    mdp.transition(s, kChainRight, right) += 1.0 - slip;
    mdp.transition(s, kChainRight, left) += slip;
  }
  mdp.reward(S - 1, kChainRight) = 1.0;
  mdp.reward(0, kChainLeft) = 0.05;
  return mdp;
}

namespace detail {

/// Symmetric Dirichlet draw written into `out`; entries are strictly positive.
/// Concentration 1 is the uniform simplex, drawn as normalized exponentials.
inline void dirichlet(Rng& rng, double concentration, std::span<double> out) {
  double total = 0.0;
  for (auto& x : out) {
    const double g = concentration == 1.0 ? rng.exponential() : rng.gamma(concentration);
    x = std::max(g, std::numeric_limits<double>::min());
    total += x;
  }
  for (auto& x : out) x /= total;
}

}  // namespace detail

/// Random ergodic MDP: Dirichlet(concentration) transition rows, uniform rewards.
inline TabularMDP make_random_tabular(std::size_t num_states, std::size_t num_actions, double concentration,
                                      std::uint64_t seed) {
  if (num_states == 0 || num_actions == 0) throw ConfigError("make_random_tabular: sizes must be positive");
  if (!(concentration > 0.0)) throw ConfigError("make_random_tabular: concentration must be positive");
  Rng rng(seed);
  TabularMDP mdp(num_states, num_actions, 0);
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t a = 0; a < num_actions; ++a) detail::dirichlet(rng, concentration, mdp.row(s, a));
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t a = 0; a < num_actions; ++a) mdp.reward(s, a) = rng.uniform();
  return mdp;
}

/// Random linear MDP with simplex features, probability-distribution measures
/// and theta uniform in [0,1]^d.
inline LinearMDPEnv make_random_linear(std::size_t dim, std::size_t num_states, std::size_t num_actions,
                                       std::uint64_t seed) {
  if (dim == 0 || num_states == 0 || num_actions == 0) throw ConfigError("make_random_linear: sizes must be positive");
  Rng rng(seed);
  const auto d = static_cast<Eigen::Index>(dim);
  const auto S = static_cast<Eigen::Index>(num_states);
  LinearMDPEnv env;
  env.num_states = num_states;
  env.num_actions = num_actions;
  env.features.resize(static_cast<Eigen::Index>(num_states * num_actions), d);
  env.measures.resize(d, S);
  env.theta.resize(d);
  std::vector<double> buf(dim);
  for (Eigen::Index i = 0; i < env.features.rows(); ++i) {
    detail::dirichlet(rng, 1.0, buf);
    for (Eigen::Index j = 0; j < d; ++j) env.features(i, j) = buf[static_cast<std::size_t>(j)];
  }
  std::vector<double> mu(num_states);
  for (Eigen::Index j = 0; j < d; ++j) {
    detail::dirichlet(rng, 1.0, mu);
    for (Eigen::Index n = 0; n < S; ++n) env.measures(j, n) = mu[static_cast<std::size_t>(n)];
  }
  for (Eigen::Index j = 0; j < d; ++j) env.theta(j) = rng.uniform();
  return env;
}

/// Generated environment, tabular or linear depending on the spec kind.
using Environment = std::variant<TabularMDP, LinearMDPEnv>;

inline TabularMDP make_tabular_base(const EnvSpec& spec, EnvKind kind) {
  if (kind == EnvKind::kChain) return make_chain(spec.num_states, spec.slip);
  return make_random_tabular(spec.num_states, spec.num_actions, spec.concentration, spec.seed);
}

inline Environment make_env(const EnvSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case EnvKind::kChain:
    case EnvKind::kRandomTabular: return make_tabular_base(spec, spec.kind);
    case EnvKind::kRandomLinear: return make_random_linear(spec.dim, spec.num_states, spec.num_actions, spec.seed);
    case EnvKind::kOnehotOfTabular: return tabular_to_onehot_linear(make_tabular_base(spec, spec.base));
  }
  throw ConfigError("make_env: unknown kind");
}

inline TabularMDP as_tabular(const Environment& env) {
  if (const auto* t = std::get_if<TabularMDP>(&env)) return *t;
  return linear_to_tabular(std::get<LinearMDPEnv>(env));
}

inline LinearMDPEnv as_linear(const Environment& env) {
  if (const auto* l = std::get_if<LinearMDPEnv>(&env)) return *l;
  return tabular_to_onehot_linear(std::get<TabularMDP>(env));
}

}  // namespace cvi
