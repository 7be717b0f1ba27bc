#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abbel/grading.hpp"
#include "abbel/rollout.hpp"

namespace abbel {

class RewardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact rational in lowest terms with a positive denominator.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Fraction make(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend bool operator==(const Fraction&, const Fraction&) = default;
};

// (H + 1 - steps) / H on success, -1 otherwise.
Fraction outcome_reward(bool success, int env_steps_taken, int horizon);
Fraction outcome_reward(const Trajectory& trajectory);

enum class RegretConvention {
  kCountSolvingGuess,  // the solving guess adds 1: final regret = guesses used
  kPreSolveOnly,       // only guesses before the solving one add 1
};

// Length-H curve; entry t counts the steps among 1..t at which the code was
// still unidentified. Unsolved episodes increment at every step.
std::vector<int> cumulative_regret(bool success, int env_steps_taken, int horizon,
                                   RegretConvention convention = RegretConvention::kCountSolvingGuess);
std::vector<int> cumulative_regret(const Trajectory& trajectory,
                                   RegretConvention convention = RegretConvention::kCountSolvingGuess);

// Longest accepted belief of a trajectory in tokens; nullopt without one.
std::optional<int> max_belief_tokens(const Trajectory& trajectory);

// scale * (x_i - mean x) over the trajectories that have a belief; 0 for the
// rest. Throws RewardError on an empty batch.
std::vector<double> length_penalties(std::span<const std::optional<int>> max_tokens,
                                     double scale = 0.01);
std::vector<double> length_penalties(std::span<const Trajectory> batch, double scale = 0.01);

// (r_i - mean r) / (population std r + epsilon) - penalty_i. Throws
// RewardError for fewer than two members.
std::vector<double> grpo_advantages(std::span<const double> rewards,
                                    std::span<const double> penalties = {},
                                    double epsilon = 1e-6);

struct RewardOptions {
  bool length_penalty = false;
  double penalty_scale = 0.01;
  double epsilon = 1e-6;
  RegretConvention regret = RegretConvention::kCountSolvingGuess;
};

struct RewardRecord {
  std::string trajectory_id;
  std::string group_id;  // trajectories sharing config and secret
  Fraction outcome_reward;
  std::vector<int> regret_curve;
  std::optional<int> max_belief_tokens;
  bool belief_tokens_estimated = false;
  double penalty = 0.0;
  double advantage = 0.0;

  friend bool operator==(const RewardRecord&, const RewardRecord&) = default;
};

struct AdvantageGroup {
  std::string group_id;
  std::vector<std::size_t> members;  // indices into the batch
};

// Groups trajectories by (config, secret) in order of first appearance.
std::vector<AdvantageGroup> advantage_groups(std::span<const Trajectory> batch);

// Rewards, penalties and group-relative advantages for a batch. Every group
// needs at least two members.
std::vector<RewardRecord> compute_rewards(std::span<const Trajectory> batch,
                                          const RewardOptions& options = {});

// Group-relative advantages of a belief group's two grades.
std::array<double, 2> belief_group_advantages(const BeliefGroup& group, double epsilon = 1e-6);

}  // namespace abbel
