#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "abbel/reward.hpp"
#include "support.hpp"

namespace abbel {
namespace {

Trajectory finished(const EnvConfig& config, const std::string& secret, bool success, int steps,
                    std::vector<int> belief_tokens = {}) {
  Trajectory traj;
  traj.config = config;
  traj.secret = secret;
  traj.success = success;
  traj.env_steps_taken = steps;
  traj.id = secret + "-" + std::to_string(steps) + (success ? "s" : "f");
  for (int t = 1; t <= steps; ++t) {
    TranscriptStep step;
    step.index = t;
    if (t <= static_cast<int>(belief_tokens.size())) {
      step.belief_after = "b";
      step.belief_tokens = belief_tokens[t - 1];
    }
    traj.steps.push_back(step);
  }
  return traj;
}

TEST(Fraction, LowestTerms) {
  EXPECT_EQ(Fraction::make(6, 12), (Fraction{1, 2}));
  EXPECT_EQ(Fraction::make(3, -9), (Fraction{-1, 3}));
  EXPECT_EQ(Fraction::make(0, 5), (Fraction{0, 1}));
  EXPECT_EQ(Fraction::make(5, 12).str(), "5/12");
  EXPECT_EQ(Fraction::make(-4, 4).str(), "-1");
  EXPECT_THROW(Fraction::make(1, 0), std::invalid_argument);
}

TEST(OutcomeReward, ExactTable) {
  for (int horizon : {12, 16}) {
    for (int k = 1; k <= horizon; ++k) {
      const auto r = outcome_reward(true, k, horizon);
      EXPECT_EQ(r.num * horizon, static_cast<std::int64_t>(horizon + 1 - k) * r.den);
      EXPECT_GT(r.value(), 0.0);
      EXPECT_LE(r.value(), 1.0);
    }
    EXPECT_EQ(outcome_reward(true, 1, horizon), (Fraction{1, 1}));
    EXPECT_EQ(outcome_reward(true, horizon, horizon), Fraction::make(1, horizon));
    for (int k = 0; k <= horizon; ++k) EXPECT_EQ(outcome_reward(false, k, horizon), (Fraction{-1, 1}));
  }
  EXPECT_EQ(outcome_reward(true, 4, 12), (Fraction{3, 4}));
  EXPECT_EQ(outcome_reward(true, 5, 16), (Fraction{3, 4}));
  EXPECT_THROW(outcome_reward(true, 0, 12), std::invalid_argument);
  EXPECT_THROW(outcome_reward(true, 13, 12), std::invalid_argument);
}

TEST(OutcomeReward, SuccessAlwaysBeatsFailureAndFasterIsBetter) {
  for (int horizon = 1; horizon <= 20; ++horizon) {
    for (int k = 1; k < horizon; ++k) {
      EXPECT_GT(outcome_reward(true, k, horizon).value(), outcome_reward(true, k + 1, horizon).value());
    }
    EXPECT_GT(outcome_reward(true, horizon, horizon).value(), outcome_reward(false, 0, horizon).value());
  }
}

TEST(Regret, Curves) {
  EXPECT_EQ(cumulative_regret(true, 3, 6), (std::vector<int>{1, 2, 3, 3, 3, 3}));
  EXPECT_EQ(cumulative_regret(true, 3, 6, RegretConvention::kPreSolveOnly),
            (std::vector<int>{1, 2, 2, 2, 2, 2}));
  EXPECT_EQ(cumulative_regret(false, 2, 4), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(cumulative_regret(true, 1, 3, RegretConvention::kPreSolveOnly), (std::vector<int>{0, 0, 0}));
}

TEST(Regret, MonotoneAndBounded) {
  for (int horizon = 1; horizon <= 16; ++horizon) {
    for (int k = 1; k <= horizon; ++k) {
      for (auto convention : {RegretConvention::kCountSolvingGuess, RegretConvention::kPreSolveOnly}) {
        const auto curve = cumulative_regret(true, k, horizon, convention);
        ASSERT_EQ(static_cast<int>(curve.size()), horizon);
        for (std::size_t t = 1; t < curve.size(); ++t) {
          EXPECT_GE(curve[t], curve[t - 1]);
          EXPECT_LE(curve[t] - curve[t - 1], 1);
        }
        EXPECT_EQ(curve.back(), convention == RegretConvention::kCountSolvingGuess ? k : k - 1);
      }
    }
  }
}

TEST(LengthPenalty, CentredAndScaled) {
  const std::vector<std::optional<int>> tokens = {100, 300};
  EXPECT_EQ(length_penalties(tokens), (std::vector<double>{-1.0, 1.0}));
  const std::vector<std::optional<int>> with_gap = {100, std::nullopt, 300};
  EXPECT_EQ(length_penalties(with_gap, 0.5), (std::vector<double>{-50.0, 0.0, 50.0}));
  EXPECT_THROW(length_penalties(std::vector<std::optional<int>>{}), RewardError);
}

TEST(LengthPenalty, SumsToZeroOverBeliefHolders) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::optional<int>> tokens;
    for (int i = 0; i < 9; ++i) tokens.push_back(rng() % 4 == 0 ? std::nullopt : std::optional<int>(rng() % 500));
    const auto penalties = length_penalties(tokens, 0.01);
    EXPECT_NEAR(std::accumulate(penalties.begin(), penalties.end(), 0.0), 0.0, 1e-9);
  }
}

TEST(Advantages, HandComputed) {
  const std::vector<double> split = {1.0, -1.0};
  auto a = grpo_advantages(split);
  EXPECT_NEAR(a[0], 1.0, 1e-5);
  EXPECT_NEAR(a[1], -1.0, 1e-5);

  const std::vector<double> tie = {0.5, 0.5};
  EXPECT_EQ(grpo_advantages(tie), (std::vector<double>{0.0, 0.0}));

  const std::vector<double> penalties = {0.2, -0.2};
  a = grpo_advantages(split, penalties);
  EXPECT_NEAR(a[0], 0.8, 1e-5);
  EXPECT_NEAR(a[1], -0.8, 1e-5);

  const std::vector<double> three = {1.0, 0.0, -1.0};
  a = grpo_advantages(three);
  const double sd = std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(a[0], 1.0 / (sd + 1e-6), 1e-12);
  EXPECT_NEAR(a[1], 0.0, 1e-12);
}

TEST(Advantages, Errors) {
  const std::vector<double> one = {1.0};
  EXPECT_THROW(grpo_advantages(one), RewardError);
  const std::vector<double> two = {1.0, 0.0};
  const std::vector<double> three = {0.0, 0.0, 0.0};
  EXPECT_THROW(grpo_advantages(two, three), RewardError);
}

TEST(Advantages, ZeroSumAndShiftInvariant) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> rewards(2 + trial % 7);
    for (auto& r : rewards) r = value(rng);
    const auto a = grpo_advantages(rewards);
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 0.0, 1e-9);
    auto shifted = rewards;
    for (auto& r : shifted) r += 3.0;
    const auto b = grpo_advantages(shifted);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
    std::vector<double> penalties(rewards.size());
    for (auto& p : penalties) p = value(rng);
    const auto c = grpo_advantages(rewards, penalties);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(c[i], a[i] - penalties[i], 1e-12);
  }
}

TEST(Batch, GroupsBySecretAndComputesAdvantages) {
  const auto config = preset_config("lock-train");
  std::vector<Trajectory> batch = {
      finished(config, "012", true, 1, {100}),
      finished(config, "345", true, 3, {50, 60, 70}),
      finished(config, "012", false, 12, {300}),
      finished(config, "345", true, 3, {90}),
  };
  const auto groups = advantage_groups(batch);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].members, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(groups[1].members, (std::vector<std::size_t>{1, 3}));

  const auto records = compute_rewards(batch);
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].outcome_reward, (Fraction{1, 1}));
  EXPECT_EQ(records[2].outcome_reward, (Fraction{-1, 1}));
  EXPECT_EQ(records[1].outcome_reward, Fraction::make(10, 12));
  EXPECT_NEAR(records[0].advantage, 1.0, 1e-5);
  EXPECT_NEAR(records[2].advantage, -1.0, 1e-5);
  EXPECT_EQ(records[1].advantage, 0.0);
  EXPECT_EQ(records[0].group_id, records[2].group_id);
  EXPECT_NE(records[0].group_id, records[1].group_id);
  EXPECT_EQ(records[1].max_belief_tokens, 70);
  EXPECT_EQ(records[0].regret_curve.size(), 12u);

  RewardOptions penalised;
  penalised.length_penalty = true;
  const auto with_penalty = compute_rewards(batch, penalised);
  EXPECT_NEAR(with_penalty[0].penalty, 0.01 * (100 - 140), 1e-12);
  EXPECT_NEAR(with_penalty[0].advantage, records[0].advantage - with_penalty[0].penalty, 1e-12);
}

TEST(Batch, LoneRolloutIsRejected) {
  const auto config = preset_config("lock-train");
  const std::vector<Trajectory> batch = {finished(config, "012", true, 1),
                                         finished(config, "345", true, 2)};
  EXPECT_THROW(compute_rewards(batch), RewardError);
}

TEST(BeliefGroupAdvantages, Signs) {
  BeliefGroup group;
  group.grades = {1, 0};
  auto a = belief_group_advantages(group);
  EXPECT_NEAR(a[0], 1.0, 1e-5);
  EXPECT_NEAR(a[1], -1.0, 1e-5);
  group.grades = {1, 1};
  EXPECT_EQ(belief_group_advantages(group), (std::array<double, 2>{0.0, 0.0}));
}

}  // namespace
}  // namespace abbel
