#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abbel/env.hpp"
#include "abbel/gateway.hpp"
#include "abbel/prompt.hpp"

namespace abbel {

enum class Regime { kAbbel, kVanilla, kBeliefPrompting };

std::string_view to_string(Regime regime);
// Accepts "abbel", "vanilla" and "belief-prompting".
Regime regime_from_string(std::string_view name);

// Completion calls allowed per episode: H for Vanilla, 2H otherwise.
int generation_budget(Regime regime, int horizon);

enum class CallPurpose { kBeliefUpdate, kActionSelect, kRetry };

std::string_view to_string(CallPurpose purpose);
CallPurpose call_purpose_from_string(std::string_view name);

struct CallRecord {
  CallPurpose purpose = CallPurpose::kActionSelect;
  std::optional<CallPurpose> retry_of;  // set iff purpose == kRetry
  Context context;
  CompletionResult result;
  std::string rejection;  // empty when the generation was usable

  bool accepted() const { return rejection.empty(); }
  friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

struct TranscriptStep {
  int index = 0;  // 1-based env step
  std::optional<std::string> belief_before;
  std::string action_raw;   // generation that produced the accepted action
  std::string action_text;  // canonical action as shown to the agent
  std::optional<Guess> guess;
  Observation observation;
  std::optional<std::string> belief_after;
  int belief_tokens = 0;  // of belief_after
  bool belief_tokens_estimated = false;
  int history_tokens = 0;  // rendered history through this step
  int history_chars = 0;
  std::vector<CallRecord> calls;
  int invalid_attempts = 0;

  friend bool operator==(const TranscriptStep&, const TranscriptStep&) = default;
};

enum class Termination {
  kSolved,
  kHorizonExhausted,
  kGenerationBudgetExhausted,
  kTransportFailure,
  kContextTooLong,
  kError,
};

std::string_view to_string(Termination termination);
Termination termination_from_string(std::string_view name);

struct Trajectory {
  std::string id;
  EnvConfig config;
  Regime regime = Regime::kAbbel;
  std::int64_t seed = 0;
  int rollout_index = 0;
  std::string secret;
  std::vector<TranscriptStep> steps;
  // Calls made after the last env step that led to no further step.
  std::vector<CallRecord> pending_calls;
  bool success = false;
  int env_steps_taken = 0;
  int generation_calls_used = 0;
  int generation_budget = 0;
  Termination termination = Termination::kHorizonExhausted;
  std::string error;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

std::string trajectory_id(const EnvConfig& config, Regime regime, std::int64_t seed,
                          int rollout_index);

struct RolloutOptions {
  Regime regime = Regime::kAbbel;
  double temperature = 1.0;
  int max_output_tokens = 1024;
  // Distinguishes repeated rollouts of one task (GRPO groups).
  int rollout_index = 0;
};

Trajectory run_episode(const EnvConfig& config, const PromptSet& prompts, Gateway& gateway,
                       std::int64_t seed, const RolloutOptions& options);

struct Task {
  EnvConfig config;
  std::int64_t seed = 0;
  int rollout_index = 0;
};

// Runs the tasks on `parallelism` workers. Results are in task order and a
// failing episode is recorded on its trajectory instead of aborting.
std::vector<Trajectory> run_batch(const std::vector<Task>& tasks, const PromptSet& prompts,
                                  Gateway& gateway, const RolloutOptions& options,
                                  int parallelism);

struct ReplayResult {
  bool ok = true;
  int steps_checked = 0;
  std::string mismatch;
};

// Re-derives the secret from (config, seed) and re-plays the recorded guesses,
// requiring byte-identical observations and matching outcome fields.
ReplayResult replay_trajectory(const Trajectory& trajectory);

}  // namespace abbel
