#include <random>

#include <gtest/gtest.h>

#include "abbel/oracle_agent.hpp"
#include "abbel/rollout.hpp"
#include "support.hpp"

namespace abbel {
namespace {

std::string reply_with(const std::string& code) {
  std::string action = "[";
  for (std::size_t i = 0; i < code.size(); ++i) {
    if (i > 0) action += ", ";
    action += "'" + std::string(1, code[i]) + "'";
  }
  action += "]";
  return "<belief>Nothing known yet.</belief><action>" + action + "</action>";
}

Trajectory without_latency(Trajectory traj) {
  auto clear = [](std::vector<CallRecord>& calls) {
    for (auto& call : calls) call.result.latency_ms = 0;
  };
  for (auto& step : traj.steps) clear(step.calls);
  clear(traj.pending_calls);
  return traj;
}

std::shared_ptr<Gateway> oracle_gateway(const EnvConfig& config) {
  return std::make_shared<Gateway>(
      std::make_shared<OracleAgentBackend>(config, default_prompts(config)));
}

TEST(Budget, PerRegime) {
  EXPECT_EQ(generation_budget(Regime::kVanilla, 12), 12);
  EXPECT_EQ(generation_budget(Regime::kAbbel, 12), 24);
  EXPECT_EQ(generation_budget(Regime::kBeliefPrompting, 12), 24);
}

TEST(Names, RoundTrip) {
  for (auto r : {Regime::kAbbel, Regime::kVanilla, Regime::kBeliefPrompting}) {
    EXPECT_EQ(regime_from_string(to_string(r)), r);
  }
  for (auto t : {Termination::kSolved, Termination::kHorizonExhausted,
                 Termination::kGenerationBudgetExhausted, Termination::kTransportFailure,
                 Termination::kContextTooLong, Termination::kError}) {
    EXPECT_EQ(termination_from_string(to_string(t)), t);
  }
  EXPECT_THROW(regime_from_string("memoryless"), std::invalid_argument);
}

TEST(Episode, ImmediateSolve) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  const auto secret = sample_task(config, 7).secret;
  for (auto regime : {Regime::kAbbel, Regime::kVanilla, Regime::kBeliefPrompting}) {
    auto gateway = testing::scripted_gateway({reply_with(secret)});
    const auto traj = run_episode(config, prompts, *gateway, 7, {regime});
    EXPECT_TRUE(traj.success);
    EXPECT_EQ(traj.termination, Termination::kSolved);
    EXPECT_EQ(traj.env_steps_taken, 1);
    EXPECT_EQ(traj.generation_calls_used, regime == Regime::kVanilla ? 1 : 2);
    ASSERT_EQ(traj.steps.size(), 1u);
    EXPECT_EQ(traj.steps[0].guess->chars, secret);
    EXPECT_EQ(traj.steps[0].belief_after.has_value(), regime != Regime::kVanilla);
    EXPECT_TRUE(replay_trajectory(traj).ok);
  }
}

TEST(Episode, AlwaysInvalidExhaustsBudgetWithoutSteps) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  for (auto regime : {Regime::kAbbel, Regime::kVanilla, Regime::kBeliefPrompting}) {
    auto gateway = testing::scripted_gateway({"[action>['0','1','2']</action>"});
    const auto traj = run_episode(config, prompts, *gateway, 3, {regime});
    EXPECT_FALSE(traj.success);
    EXPECT_EQ(traj.termination, Termination::kGenerationBudgetExhausted);
    EXPECT_EQ(traj.env_steps_taken, 0);
    EXPECT_TRUE(traj.steps.empty());
    EXPECT_EQ(traj.generation_calls_used, generation_budget(regime, config.horizon));
    ASSERT_EQ(traj.pending_calls.size(), static_cast<std::size_t>(traj.generation_calls_used));
    EXPECT_EQ(traj.pending_calls[0].purpose, CallPurpose::kActionSelect);
    for (std::size_t i = 1; i < traj.pending_calls.size(); ++i) {
      EXPECT_EQ(traj.pending_calls[i].purpose, CallPurpose::kRetry);
      EXPECT_EQ(traj.pending_calls[i].retry_of, CallPurpose::kActionSelect);
      EXPECT_EQ(traj.pending_calls[i].rejection, "MalformedOpenTag");
    }
  }
}

TEST(Episode, InvalidActionsCountAgainstBudgetButNotSteps) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  const auto secret = sample_task(config, 11).secret;
  int call = 0;
  auto gateway = std::make_shared<Gateway>(std::make_shared<CallbackBackend>(
      [&](const CompletionRequest&) -> std::string {
        return ++call == 1 ? "<action>['0','0','0']</action>" : reply_with(secret);
      }));
  const auto traj = run_episode(config, prompts, *gateway, 11, {Regime::kVanilla});
  EXPECT_TRUE(traj.success);
  EXPECT_EQ(traj.env_steps_taken, 1);
  EXPECT_EQ(traj.generation_calls_used, 2);
  ASSERT_EQ(traj.steps[0].calls.size(), 2u);
  EXPECT_EQ(traj.steps[0].calls[0].rejection, "RepeatedChar");
  EXPECT_EQ(traj.steps[0].invalid_attempts, 1);
  const auto& retry_context = traj.steps[0].calls[1].context;
  ASSERT_GE(retry_context.size(), 3u);
  EXPECT_EQ(retry_context[retry_context.size() - 2].role, "assistant");
  EXPECT_EQ(retry_context[retry_context.size() - 2].content, "<action>['0','0','0']</action>");
}

TEST(Episode, RetryContextsDoNotLeakIntoLaterSteps) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  int call = 0;
  auto gateway = std::make_shared<Gateway>(std::make_shared<CallbackBackend>(
      [&](const CompletionRequest&) -> std::string {
        ++call;
        if (call == 1) return "no tags at all";
        return call % 2 == 0 ? "<action>['0','1','2']</action>" : "<action>['3','4','5']</action>";
      }));
  const auto traj = run_episode(config, prompts, *gateway, 500, {Regime::kVanilla});
  ASSERT_GE(traj.steps.size(), 2u);
  for (const auto& message : traj.steps[1].calls[0].context) {
    EXPECT_EQ(message.content.find("no tags at all"), std::string::npos);
  }
}

TEST(Episode, AbbelActionContextsHoldNoObservations) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  std::vector<std::string> script;
  for (const auto* code : {"012", "345", "678", "901", "234", "567", "890", "123"}) {
    script.push_back(reply_with(code));
  }
  auto gateway = testing::scripted_gateway(script);
  for (std::int64_t seed = 0; seed < 25; ++seed) {
    const auto traj = run_episode(config, prompts, *gateway, seed, {Regime::kAbbel});
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      for (const auto& call : traj.steps[t].calls) {
        if (call.purpose == CallPurpose::kBeliefUpdate ||
            call.retry_of == CallPurpose::kBeliefUpdate) {
          continue;
        }
        const auto text = flatten(call.context);
        for (std::size_t s = 0; s < t; ++s) {
          EXPECT_EQ(text.find(traj.steps[s].observation.text), std::string::npos)
              << traj.id << " step " << t + 1;
        }
      }
    }
  }
}

TEST(Episode, VanillaHistoryGrows) {
  const auto config = preset_config("lock-train");
  const auto traj =
      run_episode(config, default_prompts(config), *oracle_gateway(config), 42, {Regime::kVanilla});
  for (std::size_t t = 1; t < traj.steps.size(); ++t) {
    EXPECT_GT(traj.steps[t].history_tokens, traj.steps[t - 1].history_tokens);
    EXPECT_GT(traj.steps[t].history_chars, traj.steps[t - 1].history_chars);
    const auto text = flatten(traj.steps[t].calls[0].context);
    EXPECT_NE(text.find(traj.steps[t - 1].observation.text), std::string::npos);
  }
}

TEST(Episode, ContextTooLongIsRecorded) {
  const auto config = preset_config("lock-train");
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{reply_with("012")});
  backend->set_context_window(20);
  Gateway gateway(backend);
  const auto traj = run_episode(config, default_prompts(config), gateway, 0, {Regime::kAbbel});
  EXPECT_EQ(traj.termination, Termination::kContextTooLong);
  EXPECT_FALSE(traj.success);
  EXPECT_FALSE(traj.error.empty());
}

TEST(Episode, TransportFailureIsRecorded) {
  const auto config = preset_config("lock-train");
  Gateway gateway(std::make_shared<CallbackBackend>(
                      [](const CompletionRequest&) -> std::string { throw TransportError("down"); }),
                  RetryPolicy{2});
  gateway.set_sleeper([](std::chrono::milliseconds) {});
  const auto traj = run_episode(config, default_prompts(config), gateway, 0, {Regime::kAbbel});
  EXPECT_EQ(traj.termination, Termination::kTransportFailure);
  EXPECT_NE(traj.error.find("down"), std::string::npos);
}

TEST(Episode, StructuralInvariantsUnderRandomPolicies) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  std::mt19937 rng(99);
  const auto space = hypothesis_space(config).candidates;
  std::vector<std::string> script;
  for (int i = 0; i < 30; ++i) script.push_back(reply_with(space[rng() % space.size()]));
  script.push_back("garbage");
  script.push_back("<belief></belief>");
  auto gateway = testing::scripted_gateway(script);
  for (auto regime : {Regime::kAbbel, Regime::kVanilla, Regime::kBeliefPrompting}) {
    for (std::int64_t seed = 0; seed < 60; ++seed) {
      const auto traj = run_episode(config, prompts, *gateway, seed, {regime});
      EXPECT_LE(traj.env_steps_taken, config.horizon);
      EXPECT_LE(traj.generation_calls_used, traj.generation_budget);
      EXPECT_EQ(static_cast<int>(traj.steps.size()), traj.env_steps_taken);
      if (traj.success) {
        EXPECT_EQ(traj.steps.back().guess->chars, traj.secret);
      }
      std::size_t calls = traj.pending_calls.size();
      for (const auto& step : traj.steps) calls += step.calls.size();
      EXPECT_EQ(static_cast<int>(calls), traj.generation_calls_used);
      EXPECT_TRUE(replay_trajectory(traj).ok) << traj.id;
    }
  }
}

TEST(Batch, OrderAndParallelismDoNotChangeResults) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  auto gateway = oracle_gateway(config);
  std::vector<Task> tasks;
  for (int i = 0; i < 24; ++i) tasks.push_back({config, 100 + i, i % 2});
  const auto serial = run_batch(tasks, prompts, *gateway, {Regime::kAbbel}, 1);
  const auto parallel = run_batch(tasks, prompts, *gateway, {Regime::kAbbel}, 8);
  ASSERT_EQ(serial.size(), tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    EXPECT_EQ(serial[i].seed, tasks[i].seed);
    EXPECT_EQ(serial[i].rollout_index, tasks[i].rollout_index);
    EXPECT_EQ(without_latency(serial[i]), without_latency(parallel[i]));
  }
  RolloutOptions single{Regime::kAbbel};
  single.rollout_index = 1;
  EXPECT_EQ(without_latency(run_batch({tasks[1]}, prompts, *gateway, {Regime::kAbbel}, 1)[0]),
            without_latency(run_episode(config, prompts, *gateway, 101, single)));
  EXPECT_THROW(run_batch(tasks, prompts, *gateway, {}, 0), std::invalid_argument);
}

TEST(Batch, FailingEpisodeDoesNotAbortTheBatch) {
  const auto config = preset_config("lock-train");
  auto gateway = testing::scripted_gateway({reply_with("012")});
  auto broken = config;
  broken.horizon = 0;
  const auto out = run_batch({{config, 1, 0}, {broken, 2, 0}}, default_prompts(config), *gateway,
                             {Regime::kVanilla}, 2);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_NE(out[0].termination, Termination::kError);
  EXPECT_EQ(out[1].termination, Termination::kError);
  EXPECT_EQ(out[1].seed, 2);
  EXPECT_FALSE(out[1].error.empty());
}

// Consistent guessing replayed with the independent feedback rule.
int brute_oracle_steps(const std::string& secret, const std::vector<std::string>& space) {
  auto remaining = space;
  for (int step = 1;; ++step) {
    const auto guess = remaining.front();
    if (guess == secret) return step;
    const auto marks = testing::brute_marks(secret, guess);
    std::erase_if(remaining, [&](const std::string& c) { return testing::brute_marks(c, guess) != marks; });
  }
}

TEST(Oracle, SolvesEveryTrainingSecretLikeTheBruteForceOracle) {
  const auto config = preset_config("lock-train");
  const auto prompts = default_prompts(config);
  const auto space = testing::brute_codes(config.vocabulary, config.code_length, true);
  auto gateway = oracle_gateway(config);
  for (std::int64_t seed = 0; seed < 720; ++seed) {
    const auto traj = run_episode(config, prompts, *gateway, seed, {Regime::kAbbel});
    ASSERT_TRUE(traj.success) << traj.id;
    ASSERT_EQ(traj.env_steps_taken, brute_oracle_steps(traj.secret, space)) << traj.id;
  }
}

TEST(Oracle, AgentPicksSmallestCandidate) {
  const auto config = preset_config("lock-train");
  EXPECT_EQ(oracle_agent(hypothesis_space(config)).chars, "012");
  EXPECT_THROW(oracle_agent(ExactPosterior{config, {}}), DegenerateHistoryError);
}

TEST(Replay, DetectsTampering) {
  const auto config = preset_config("lock-train");
  auto traj =
      run_episode(config, default_prompts(config), *oracle_gateway(config), 5, {Regime::kAbbel});
  const auto ok = replay_trajectory(traj);
  EXPECT_TRUE(ok.ok);
  EXPECT_EQ(ok.steps_checked, traj.env_steps_taken);

  auto observation = traj;
  observation.steps[0].observation.text += "!";
  EXPECT_FALSE(replay_trajectory(observation).ok);

  auto secret = traj;
  secret.secret = secret.secret == "012" ? "013" : "012";
  EXPECT_FALSE(replay_trajectory(secret).ok);

  auto outcome = traj;
  outcome.success = !outcome.success;
  EXPECT_FALSE(replay_trajectory(outcome).ok);
}

}  // namespace
}  // namespace abbel
