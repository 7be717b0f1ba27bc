#include <fstream>

#include <gtest/gtest.h>

#include "abbel/config.hpp"
#include "support.hpp"

namespace abbel {
namespace {

TEST(AppConfig, DefaultsFromEmptyObject) {
  const auto config = parse_app_config("{}");
  EXPECT_EQ(config.env, preset_config("lock-train"));
  EXPECT_EQ(config.backend.kind, BackendKind::kOracle);
  EXPECT_EQ(config.rollout.regime, Regime::kAbbel);
  EXPECT_EQ(config.grading.parser, ParserKind::kReference);
  EXPECT_EQ(config.rewards.regret, RegretConvention::kCountSolvingGuess);
  EXPECT_EQ(config.parallelism, 1);
}

TEST(AppConfig, ReadsEverySection) {
  const auto config = parse_app_config(R"({
    "env": {"preset": "lock-test", "horizon": 16},
    "backend": {"type": "http", "max_in_flight": 4, "context_window": 4096,
                "http": {"base_url": "http://localhost:8000", "model": "m", "api_key_env": "K",
                         "timeout_s": 30},
                "retry": {"max_attempts": 3, "multiplier": 3.0, "initial_backoff_ms": 10,
                          "max_backoff_ms": 90}},
    "rollout": {"regime": "vanilla", "temperature": 0.7, "max_output_tokens": 256},
    "grading": {"parser": "llm", "parser_temperature": 0.1, "temperature": 0.9,
                "max_output_tokens": 128},
    "rewards": {"length_penalty": true, "penalty_scale": 0.02, "epsilon": 1e-4,
                "regret": "pre-solve-only"},
    "parallelism": 6
  })");
  EXPECT_EQ(config.env.kind, EnvKind::kCombinationLock);
  EXPECT_EQ(config.env.vocabulary, preset_config("lock-test").vocabulary);
  EXPECT_EQ(config.env.horizon, 16);
  EXPECT_EQ(config.backend.kind, BackendKind::kHttp);
  EXPECT_EQ(config.backend.max_in_flight, 4);
  EXPECT_EQ(config.backend.context_window, 4096);
  EXPECT_EQ(config.backend.http.base_url, "http://localhost:8000");
  EXPECT_EQ(config.backend.http.model, "m");
  EXPECT_EQ(config.backend.http.api_key_env, "K");
  EXPECT_EQ(config.backend.http.timeout, std::chrono::seconds(30));
  EXPECT_EQ(config.backend.retry.max_attempts, 3);
  EXPECT_EQ(config.backend.retry.initial_backoff, std::chrono::milliseconds(10));
  EXPECT_EQ(config.backend.retry.max_backoff, std::chrono::milliseconds(90));
  EXPECT_DOUBLE_EQ(config.backend.retry.multiplier, 3.0);
  EXPECT_EQ(config.rollout.regime, Regime::kVanilla);
  EXPECT_DOUBLE_EQ(config.rollout.temperature, 0.7);
  EXPECT_EQ(config.rollout.max_output_tokens, 256);
  EXPECT_EQ(config.grading.parser, ParserKind::kLlm);
  EXPECT_DOUBLE_EQ(config.grading.parser_temperature, 0.1);
  EXPECT_DOUBLE_EQ(config.grading.grouping.temperature, 0.9);
  EXPECT_EQ(config.grading.grouping.max_output_tokens, 128);
  EXPECT_TRUE(config.rewards.length_penalty);
  EXPECT_DOUBLE_EQ(config.rewards.penalty_scale, 0.02);
  EXPECT_DOUBLE_EQ(config.rewards.epsilon, 1e-4);
  EXPECT_EQ(config.rewards.regret, RegretConvention::kPreSolveOnly);
  EXPECT_EQ(config.parallelism, 6);
}

TEST(AppConfig, RejectsBadInput) {
  EXPECT_THROW(parse_app_config("not json"), ConfigError);
  EXPECT_THROW(parse_app_config(R"({"backend": {"type": "carrier-pigeon"}})"), ConfigError);
  EXPECT_THROW(parse_app_config(R"({"rollout": {"regime": "memoryless"}})"), ConfigError);
  EXPECT_THROW(parse_app_config(R"({"parallelism": 0})"), ConfigError);
  EXPECT_THROW(parse_app_config(R"({"env": {"preset": "chess"}})"), ConfigError);
  EXPECT_THROW(parse_app_config(R"({"rewards": {"regret": "sometimes"}})"), ConfigError);
  EXPECT_THROW(parse_app_config(R"({"parallelism": "many"})"), ConfigError);
  EXPECT_THROW(load_app_config("/nonexistent/abbel.json"), ConfigError);
}

TEST(AppConfig, LoadsFromFile) {
  testing::TempDir dir;
  std::ofstream(dir / "c.json") << R"({"env": {"preset": "mastermind"}, "parallelism": 2})";
  const auto config = load_app_config(dir / "c.json");
  EXPECT_EQ(config.env.kind, EnvKind::kMastermind);
  EXPECT_EQ(config.parallelism, 2);
}

TEST(AppConfig, FactoriesBuildWorkingGateways) {
  auto config = parse_app_config(R"({"backend": {"type": "scripted", "script": ["<action>x</action>"]}})");
  const auto prompts = make_prompts(config);
  auto gateway = make_gateway(config, prompts);
  EXPECT_EQ(gateway->backend().id(), "scripted");
  CompletionRequest request;
  request.context = {{"user", "hi"}};
  EXPECT_EQ(gateway->complete(request).text, "<action>x</action>");

  config.backend.kind = BackendKind::kOracle;
  EXPECT_EQ(make_backend(config, prompts)->id(), "oracle");
  EXPECT_EQ(backend_kind_from_string(to_string(BackendKind::kHttp)), BackendKind::kHttp);
}

TEST(AppConfig, PromptsDirOverridesDefaults) {
  testing::TempDir dir;
  std::ofstream(dir / "belief_prompt.txt") << "Custom belief prompt.";
  auto config = parse_app_config("{}");
  config.prompts_dir = dir.path();
  EXPECT_EQ(make_prompts(config).belief_prompt, "Custom belief prompt.");
}

}  // namespace
}  // namespace abbel
