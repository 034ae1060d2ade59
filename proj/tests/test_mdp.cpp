#include <gtest/gtest.h>

#include <cmath>

#include "cvi/envs.hpp"
#include "cvi/mdp.hpp"
#include "cvi/text_format.hpp"

using namespace cvi;

namespace {

TabularMDP two_state_half() {
  TabularMDP m(2, 1);
  for (std::size_t s = 0; s < 2; ++s) {
    m.transition(s, 0, 0) = 0.5;
    m.transition(s, 0, 1) = 0.5;
  }
  return m;
}

const Violation* find(const ValidationReport& r, const std::string& kind) {
  for (const auto& v : r.violations)
    if (v.kind == kind) return &v;
  return nullptr;
}

LinearMDPEnv half_half_env() {
  LinearMDPEnv env;
  env.num_states = 3;
  env.num_actions = 2;
  env.features = Eigen::MatrixXd::Constant(6, 2, 0.5);
  env.measures.resize(2, 3);
  env.measures << 0.2, 0.3, 0.5, 1.0, 0.0, 0.0;
  env.theta = Eigen::Vector2d(1.0, 0.0);
  return env;
}

}  // namespace

TEST(ValidateTabular, ExactStochasticRowsPass) { EXPECT_TRUE(validate_tabular(two_state_half()).ok()); }

TEST(ValidateTabular, ShortRowReportsDeficit) {
  auto m = two_state_half();
  m.transition(1, 0, 1) = 0.48;
  const auto rep = validate_tabular(m);
  const auto* v = find(rep, "row-sum");
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->magnitude, 0.02, 1e-12);
  EXPECT_EQ(v->index, (std::vector<std::size_t>{1, 0}));
}

TEST(ValidateTabular, RewardAboveOne) {
  auto m = two_state_half();
  m.reward(0, 0) = 1.5;
  const auto* v = find(validate_tabular(m), "reward-range");
  ASSERT_NE(v, nullptr);
  EXPECT_NEAR(v->magnitude, 0.5, 1e-12);
}

TEST(ValidateTabular, NegativeProbabilityAndBadInitialState) {
  auto m = two_state_half();
  m.transition(0, 0, 0) = 1.1;
  m.transition(0, 0, 1) = -0.1;
  m.set_initial_state(5);
  const auto rep = validate_tabular(m);
  EXPECT_TRUE(rep.has("negative-probability"));
  EXPECT_TRUE(rep.has("initial-state"));
  EXPECT_FALSE(rep.describe().empty());
}

TEST(ValidateLinear, SimplexConstructionPasses) { EXPECT_TRUE(validate_linear(half_half_env()).ok()); }

TEST(ValidateLinear, FeatureNormTooLarge) {
  auto env = half_half_env();
  env.features.row(3) << 1.2, 0.0;
  EXPECT_TRUE(validate_linear(env).has("feature-norm"));
}

TEST(ValidateLinear, ThetaNormTooLarge) {
  auto env = half_half_env();
  env.theta = Eigen::Vector2d::Constant(2.0);  // norm 2 sqrt(2) = 2 sqrt(d)
  EXPECT_TRUE(validate_linear(env).has("theta-norm"));
}

TEST(ValidateLinear, ShapeMismatch) {
  auto env = half_half_env();
  env.measures.resize(2, 2);
  EXPECT_TRUE(validate_linear(env).has("shape"));
}

TEST(LinearToTabular, BasisFeatureGivesUniformRows) {
  LinearMDPEnv env;
  env.num_states = 4;
  env.num_actions = 2;
  env.features = Eigen::MatrixXd::Zero(8, 2);
  env.features.col(0).setOnes();
  env.measures = Eigen::MatrixXd::Zero(2, 4);
  env.measures.row(0).setConstant(0.25);
  env.theta = Eigen::Vector2d(0.3, 0.9);
  const auto m = linear_to_tabular(env);
  for (std::size_t s = 0; s < 4; ++s)
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t n = 0; n < 4; ++n) EXPECT_DOUBLE_EQ(m.transition(s, a, n), 0.25);
      EXPECT_DOUBLE_EQ(m.reward(s, a), 0.3);
    }
}

TEST(LinearToTabular, MixtureOfPointMasses) {
  LinearMDPEnv env;
  env.num_states = 2;
  env.num_actions = 1;
  env.features.resize(2, 2);
  env.features << 0.3, 0.7, 0.3, 0.7;
  env.measures = Eigen::Matrix2d::Identity();
  env.theta = Eigen::Vector2d(0.0, 0.0);
  const auto m = linear_to_tabular(env);
  EXPECT_DOUBLE_EQ(m.transition(0, 0, 0), 0.3);
  EXPECT_DOUBLE_EQ(m.transition(0, 0, 1), 0.7);
}

TEST(LinearToTabular, RandomSimplexEnvValidates) {
  const auto env = make_random_linear(4, 6, 3, 7);
  const auto m = linear_to_tabular(env);
  EXPECT_TRUE(validate_tabular(m).ok());
  for (std::size_t s = 0; s < 6; ++s)
    for (std::size_t a = 0; a < 3; ++a) {
      double total = 0.0;
      for (double p : m.row(s, a)) total += p;
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(LinearToTabular, NegativeReconstructionThrows) {
  auto env = half_half_env();
  env.features.row(0) << 1.0, -0.5;
  env.measures << 0.0, 0.5, 0.5, 1.0, 0.0, 0.0;
  EXPECT_THROW(linear_to_tabular(env), InvalidEnv);
}

TEST(OnehotEmbedding, RoundTripIsExact) {
  TabularMDP m(2, 2);
  m.transition(0, 0, 0) = 0.25;
  m.transition(0, 0, 1) = 0.75;
  m.transition(0, 1, 1) = 1.0;
  m.transition(1, 0, 0) = 1.0;
  m.transition(1, 1, 0) = 0.6;
  m.transition(1, 1, 1) = 0.4;
  m.reward(0, 1) = 0.3;
  m.reward(1, 0) = 1.0;
  const auto env = tabular_to_onehot_linear(m);
  EXPECT_EQ(env.dim(), 4u);
  EXPECT_TRUE(validate_linear(env).ok());
  EXPECT_EQ(linear_to_tabular(env), m);
}

TEST(OnehotEmbedding, FeaturesHaveUnitNorm) {
  const auto env = tabular_to_onehot_linear(make_random_tabular(3, 3, 1.0, 2));
  for (Eigen::Index i = 0; i < env.features.rows(); ++i) EXPECT_DOUBLE_EQ(env.features.row(i).norm(), 1.0);
}

TEST(TextFormat, TabularRoundTripIsBitExact) {
  const Environment env = make_random_tabular(4, 3, 0.7, 19);
  const std::string text = write_environment(env);
  const auto back = read_environment_string(text);
  EXPECT_EQ(std::get<TabularMDP>(back), std::get<TabularMDP>(env));
  EXPECT_EQ(write_environment(back), text);
}

TEST(TextFormat, LinearRoundTripIsBitExact) {
  const Environment env = make_random_linear(3, 5, 2, 4);
  const auto back = read_environment_string(write_environment(env));
  const auto& a = std::get<LinearMDPEnv>(env);
  const auto& b = std::get<LinearMDPEnv>(back);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.measures, b.measures);
  EXPECT_EQ(a.theta, b.theta);
}

TEST(TextFormat, ParsesCommentsAndSections) {
  const auto doc = parse_kv_string("# header\n[a]\nx = 1  \n\n[b]\n0.5 0.25\n1 2\n");
  EXPECT_EQ(doc.get("a", "x").value(), "1");
  ASSERT_NE(doc.section("b"), nullptr);
  EXPECT_EQ(doc.section("b")->rows.size(), 2u);
  EXPECT_DOUBLE_EQ(doc.section("b")->rows[0][1], 0.25);
  EXPECT_FALSE(doc.get("a", "y").has_value());
}

TEST(TextFormat, MalformedInputThrows) {
  EXPECT_THROW(parse_kv_string("[a]\n1 2 x\n"), ConfigError);
  EXPECT_THROW(read_environment_string("[meta]\nkind = tabular\nS = 2\nA = 1\n"), ConfigError);
}

TEST(TextFormat, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567}) EXPECT_EQ(std::stod(format_double(x)), x);
}
