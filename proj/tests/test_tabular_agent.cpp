#include <gtest/gtest.h>

#include <cmath>

#include "cvi/envs.hpp"
#include "cvi/oracle.hpp"
#include "cvi/tabular_agent.hpp"

using namespace cvi;

namespace {

TabularMDP single_state(double r) {
  TabularMDP m(1, 1);
  m.transition(0, 0, 0) = 1.0;
  m.reward(0, 0) = r;
  return m;
}

AlgoConfig plain_config(double gamma, double beta, double H, std::int64_t T = 10) {
  AlgoConfig c;
  c.horizon = T;
  c.gamma = gamma;
  c.bonus_factor = beta;
  c.span_bound = H;
  return c;
}

}  // namespace

TEST(ArgmaxLowest, TieGoesToLowestIndex) {
  const std::vector<double> row{0.2, 0.9, 0.9};
  EXPECT_EQ(argmax_lowest(row), 1u);
  const std::vector<double> other{3.0, 1.0};
  EXPECT_EQ(argmax_lowest(other), 0u);
}

TEST(TabularAgent, FreshAgentPicksActionZero) {
  const auto m = make_random_tabular(3, 4, 1.0, 1);
  TabularAgent agent(m, plain_config(0.9, 1.0, 2.0));
  for (std::size_t s = 0; s < 3; ++s) EXPECT_EQ(agent.act(s), 0u);
  for (double q : agent.q()) EXPECT_DOUBLE_EQ(q, 10.0);
}

TEST(TabularAgent, SingleStateHandTrace) {
  TabularAgent agent(single_state(1.0), plain_config(0.5, 0.0, 0.0));
  agent.update(0, 0, 0);
  EXPECT_DOUBLE_EQ(agent.q()[0], 2.0);
  EXPECT_DOUBLE_EQ(agent.v()[0], 2.0);
  EXPECT_EQ(agent.count(0, 0), 2);
}

TEST(TabularAgent, HugeBonusLeavesQUnchanged) {
  const auto m = make_random_tabular(3, 2, 1.0, 2);
  const std::int64_t T = 200;
  const double gamma = 0.9;
  TabularAgent agent(m, plain_config(gamma, 10.0 * std::sqrt(static_cast<double>(T)), 5.0, T));
  Rng rng(3);
  StateIndex s = 0;
  for (std::int64_t t = 0; t < T; ++t) {
    const auto before = agent.q();
    const auto a = agent.act(s);
    const auto next = rng.categorical(m.row(s, a));
    agent.update(s, a, next);
    EXPECT_EQ(agent.q(), before);
    s = next;
  }
}

TEST(TabularAgent, ZeroSpanMakesValuesConstant) {
  const auto m = make_random_tabular(4, 2, 1.0, 5);
  TabularAgent agent(m, plain_config(0.8, 0.0, 0.0));
  Rng rng(1);
  StateIndex s = 0;
  for (int t = 0; t < 30; ++t) {
    const auto a = agent.act(s);
    const auto next = rng.categorical(m.row(s, a));
    agent.update(s, a, next);
    const double lowest = min_of(agent.v_tilde());
    for (double v : agent.v()) EXPECT_DOUBLE_EQ(v, lowest);
    s = next;
  }
}

TEST(TabularAgent, EmpiricalModelMatchesCounts) {
  const auto m = make_random_tabular(3, 2, 1.0, 8);
  TabularAgent agent(m, plain_config(0.9, 0.5, 3.0));
  agent.update(1, 0, 2);
  agent.update(1, 0, 2);
  agent.update(1, 0, 0);
  EXPECT_EQ(agent.count(1, 0), 4);
  EXPECT_EQ(agent.count(1, 1), 1);
  const auto& p = agent.p_hat();
  EXPECT_DOUBLE_EQ(p[(1 * 2 + 0) * 3 + 0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p[(1 * 2 + 0) * 3 + 1], 0.0);
  EXPECT_DOUBLE_EQ(p[(1 * 2 + 0) * 3 + 2], 2.0 / 3.0);
  // Unvisited pairs keep the optimistic initial value.
  EXPECT_DOUBLE_EQ(agent.q()[1 * 2 + 1], 10.0);
}

TEST(DefaultTabularConfig, DiscountForHundredSteps) {
  const auto c = default_tabular_config(5, 2, 1.0, 100);
  EXPECT_NEAR(c.gamma, 0.9, 1e-15);
  EXPECT_DOUBLE_EQ(c.span_bound, 2.0);
}

TEST(DefaultTabularConfig, BonusScale) {
  const auto c = default_tabular_config(5, 2, 1.0, 1000, 0.1, 1.0);
  EXPECT_NEAR(c.bonus_factor, 2.0 * std::sqrt(5.0 * std::log(100000.0)), 1e-12);
  EXPECT_NEAR(c.bonus_factor, 15.17, 5e-3);
}

TEST(DefaultTabularConfig, RejectsBadInputs) {
  EXPECT_THROW(default_tabular_config(2, 2, 1.0, 0), InvalidHorizon);
  EXPECT_THROW(default_tabular_config(2, 2, -1.0, 10), ConfigError);
}

TEST(RunTabular, SingleStepUsesActionZero) {
  auto m = make_random_tabular(3, 3, 1.0, 4);
  const auto rec = run_tabular(m, plain_config(0.5, 1.0, 1.0, 1));
  ASSERT_EQ(rec.length(), 1u);
  EXPECT_EQ(rec.rewards[0], m.reward(m.initial_state(), 0));
  EXPECT_EQ(rec.episode_starts, (std::vector<std::int64_t>{1}));
}

TEST(RunTabular, SingleStateHasZeroRegret) {
  auto m = single_state(0.6);
  auto rec = run_tabular(m, default_tabular_config(1, 1, 0.0, 500));
  EXPECT_NEAR(regret_of(rec, solve_average_reward(m).j_star), 0.0, 1e-9);
}

TEST(RunTabular, InvalidMdpThrows) {
  TabularMDP m(2, 1);
  m.transition(0, 0, 0) = 1.0;
  EXPECT_THROW(run_tabular(m, plain_config(0.5, 1.0, 1.0)), InvalidEnv);
}

TEST(RunTabular, SameSeedSameTrajectory) {
  const auto m = make_chain(5, 0.2);
  auto cfg = default_tabular_config(5, 2, 3.0, 800, 0.1, 0.1);
  cfg.seed = 42;
  const auto a = run_tabular(m, cfg);
  const auto b = run_tabular(m, cfg);
  EXPECT_EQ(a.states, b.states);
  EXPECT_EQ(a.actions, b.actions);
}

TEST(TabularInvariants, HoldAlongDefaultRuns) {
  const auto m = make_random_tabular(4, 3, 1.0, 12);
  const auto avg = solve_average_reward(m);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto cfg = default_tabular_config(4, 3, avg.span_v, 1500);
    cfg.seed = seed;
    TabularInvariantMonitor mon;
    run_tabular(m, cfg, &mon);
    EXPECT_TRUE(mon.bounds_ok());
    EXPECT_TRUE(mon.monotone_ok());
    EXPECT_TRUE(mon.ordering_ok());
    EXPECT_TRUE(mon.span_ok());
    EXPECT_TRUE(mon.model_ok());
    EXPECT_LE(mon.bonus_sum(), mon.bonus_sum_bound(4, 3));
  }
}

// With the default bonus, optimism should hold on most seeds.
TEST(TabularInvariants, OptimismHoldsWithHighProbability) {
  const auto m = make_random_tabular(4, 2, 1.0, 21);
  const auto avg = solve_average_reward(m);
  int optimistic = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto cfg = default_tabular_config(4, 2, avg.span_v, 1000);
    cfg.seed = seed;
    const auto disc = solve_discounted(m, cfg.gamma);
    TabularInvariantMonitor mon;
    mon.set_optimism_reference(disc.v, disc.q);
    run_tabular(m, cfg, &mon);
    optimistic += mon.worst_optimism() >= -1e-9 ? 1 : 0;
  }
  EXPECT_GE(optimistic, 18);
}

// Uses the same bonus scale as the sublinearity acceptance runs; at c = 2 the
// bonus stays above the value cap for every T considered here.
TEST(RunTabular, PerStepRegretFallsWhenHorizonDoubles) {
  const auto m = make_chain(5, 0.1);
  const auto avg = solve_average_reward(m);
  double per_step[2];
  const std::int64_t horizons[2] = {5000, 10000};
  for (int h = 0; h < 2; ++h) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto cfg = default_tabular_config(5, 2, avg.span_v, horizons[h], 0.1, 0.1);
      cfg.seed = seed;
      auto rec = run_tabular(m, cfg);
      total += regret_of(rec, avg.j_star);
    }
    per_step[h] = total / 20.0 / static_cast<double>(horizons[h]);
  }
  EXPECT_LT(per_step[1], per_step[0]);
}

TEST(RunTabular, DefaultBonusStaysInCapRegimeOnChain) {
  const auto m = make_chain(5, 0.1);
  const auto avg = solve_average_reward(m);
  auto cfg = default_tabular_config(5, 2, avg.span_v, 5000);
  auto rec = run_tabular(m, cfg);
  // Every step takes LEFT at state 0.
  for (std::size_t t = 0; t < rec.length(); ++t) EXPECT_EQ(rec.actions[t], kChainLeft);
  EXPECT_NEAR(regret_of(rec, avg.j_star), 5000.0 * (avg.j_star - 0.05), 1e-6);
}
