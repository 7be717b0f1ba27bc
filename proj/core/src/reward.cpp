#include "abbel/reward.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

namespace abbel {

Fraction Fraction::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("fraction with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const auto g = std::gcd(num, den);
  return g > 1 ? Fraction{num / g, den / g} : Fraction{num, den};
}

std::string Fraction::str() const {
  return den == 1 ? std::to_string(num) : fmt::format("{}/{}", num, den);
}

Fraction outcome_reward(bool success, int env_steps_taken, int horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (!success) return Fraction{-1, 1};
  if (env_steps_taken < 1 || env_steps_taken > horizon) {
    throw std::invalid_argument(
        fmt::format("a success takes 1..{} steps, got {}", horizon, env_steps_taken));
  }
  return Fraction::make(horizon + 1 - env_steps_taken, horizon);
}

Fraction outcome_reward(const Trajectory& trajectory) {
  return outcome_reward(trajectory.success, trajectory.env_steps_taken, trajectory.config.horizon);
}

std::vector<int> cumulative_regret(bool success, int env_steps_taken, int horizon,
                                   RegretConvention convention) {
  std::vector<int> curve(static_cast<std::size_t>(std::max(horizon, 0)));
  int regret = 0;
  for (int t = 1; t <= horizon; ++t) {
    bool identified = false;
    if (success) {
      identified = convention == RegretConvention::kCountSolvingGuess ? t > env_steps_taken
                                                                      : t >= env_steps_taken;
    }
    if (!identified) ++regret;
    curve[t - 1] = regret;
  }
  return curve;
}

std::vector<int> cumulative_regret(const Trajectory& trajectory, RegretConvention convention) {
  return cumulative_regret(trajectory.success, trajectory.env_steps_taken,
                           trajectory.config.horizon, convention);
}

std::optional<int> max_belief_tokens(const Trajectory& trajectory) {
  std::optional<int> best;
  for (const auto& step : trajectory.steps) {
    if (step.belief_after) best = std::max(best.value_or(0), step.belief_tokens);
  }
  return best;
}

std::vector<double> length_penalties(std::span<const std::optional<int>> max_tokens,
                                     double scale) {
  if (max_tokens.empty()) throw RewardError("length penalty needs a non-empty batch");
  double sum = 0.0;
  int count = 0;
  for (const auto& tokens : max_tokens) {
    if (tokens) {
      sum += *tokens;
      ++count;
    }
  }
  std::vector<double> penalties(max_tokens.size(), 0.0);
  if (count == 0) return penalties;
  const double mean = sum / count;
  for (std::size_t i = 0; i < max_tokens.size(); ++i) {
    if (max_tokens[i]) penalties[i] = scale * (*max_tokens[i] - mean);
  }
  return penalties;
}

std::vector<double> length_penalties(std::span<const Trajectory> batch, double scale) {
  std::vector<std::optional<int>> max_tokens;
  max_tokens.reserve(batch.size());
  for (const auto& trajectory : batch) max_tokens.push_back(max_belief_tokens(trajectory));
  return length_penalties(max_tokens, scale);
}

std::vector<double> grpo_advantages(std::span<const double> rewards,
                                    std::span<const double> penalties, double epsilon) {
  if (rewards.size() < 2) {
    throw RewardError(fmt::format("a GRPO group needs at least 2 members, got {}", rewards.size()));
  }
  if (!penalties.empty() && penalties.size() != rewards.size()) {
    throw RewardError("penalties and rewards differ in length");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double variance = 0.0;
  for (double r : rewards) variance += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(variance / n);
  std::vector<double> advantages;
  advantages.reserve(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    double a = (rewards[i] - mean) / (std_dev + epsilon);
    if (!penalties.empty()) a -= penalties[i];
    advantages.push_back(a);
  }
  return advantages;
}

std::vector<AdvantageGroup> advantage_groups(std::span<const Trajectory> batch) {
  std::vector<AdvantageGroup> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto key = fmt::format("{}|{}", batch[i].config.describe(), batch[i].secret);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      groups.push_back({fmt::format("{}-{}-g{}", to_string(batch[i].config.kind),
                                    to_string(batch[i].regime), groups.size()),
                        {}});
    }
    groups[it->second].members.push_back(i);
  }
  return groups;
}

std::vector<RewardRecord> compute_rewards(std::span<const Trajectory> batch,
                                          const RewardOptions& options) {
  std::vector<RewardRecord> records(batch.size());
  std::vector<double> penalties(batch.size(), 0.0);
  if (options.length_penalty && !batch.empty()) {
    penalties = length_penalties(batch, options.penalty_scale);
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& record = records[i];
    record.trajectory_id = batch[i].id;
    record.outcome_reward = outcome_reward(batch[i]);
    record.regret_curve = cumulative_regret(batch[i], options.regret);
    record.max_belief_tokens = max_belief_tokens(batch[i]);
    for (const auto& step : batch[i].steps) {
      record.belief_tokens_estimated = record.belief_tokens_estimated || step.belief_tokens_estimated;
    }
    record.penalty = penalties[i];
  }
  for (const auto& group : advantage_groups(batch)) {
    if (group.members.size() < 2) {
      throw RewardError(fmt::format("trajectory {} has no other rollout of its task to compare with",
                                    batch[group.members.front()].id));
    }
    std::vector<double> rewards;
    std::vector<double> group_penalties;
    for (auto i : group.members) {
      rewards.push_back(records[i].outcome_reward.value());
      group_penalties.push_back(records[i].penalty);
    }
    const auto advantages = grpo_advantages(rewards, group_penalties, options.epsilon);
    for (std::size_t k = 0; k < group.members.size(); ++k) {
      records[group.members[k]].group_id = group.group_id;
      records[group.members[k]].advantage = advantages[k];
    }
  }
  return records;
}

std::array<double, 2> belief_group_advantages(const BeliefGroup& group, double epsilon) {
  const std::array<double, 2> grades{static_cast<double>(group.grades[0]),
                                     static_cast<double>(group.grades[1])};
  const auto advantages = grpo_advantages(grades, {}, epsilon);
  return {advantages[0], advantages[1]};
}

}  // namespace abbel
