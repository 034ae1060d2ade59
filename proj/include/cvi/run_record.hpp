#pragma once

#include <cstdint>
#include <vector>

#include "cvi/mdp.hpp"

namespace cvi {

/// Trajectory of one run. Vectors are 0-based in storage; time indices stored in
/// episode_starts are 1-based (the first step is t = 1).
struct RunRecord {
  std::vector<StateIndex> states;
  std::vector<ActionIndex> actions;
  std::vector<double> rewards;
  std::vector<std::int64_t> episode_starts;
  /// Episode index (1-based) in effect at each step.
  std::vector<std::int64_t> episode_of_step;
  /// Number of episodes opened, counting one opened by a trigger at the last step.
  std::int64_t episode_count = 1;
  /// regret_series[i] = sum over the first i + 1 steps of (J* - reward).
  std::vector<double> regret_series;
  double j_star = 0.0;

  std::size_t length() const { return rewards.size(); }
  double final_regret() const { return regret_series.empty() ? 0.0 : regret_series.back(); }
};

}  // namespace cvi
