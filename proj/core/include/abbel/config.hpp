#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abbel/env.hpp"
#include "abbel/gateway.hpp"
#include "abbel/grading.hpp"
#include "abbel/prompt.hpp"
#include "abbel/reward.hpp"
#include "abbel/rollout.hpp"

namespace abbel {

enum class BackendKind { kOracle, kScripted, kHttp };
enum class ParserKind { kReference, kLlm };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::kOracle;
  HttpBackendOptions http;
  std::vector<std::string> script;
  std::optional<int> context_window;
  RetryPolicy retry;
  int max_in_flight = 8;
};

struct GradingConfig {
  ParserKind parser = ParserKind::kReference;
  double parser_temperature = 0.0;
  GroupingOptions grouping;
};

struct AppConfig {
  EnvConfig env = preset_config("lock-train");
  BackendConfig backend;
  std::optional<std::filesystem::path> prompts_dir;
  RolloutOptions rollout;
  GradingConfig grading;
  RewardOptions rewards;
  int parallelism = 1;
};

// JSON file with optional sections env, backend, prompts_dir, rollout,
// grading, rewards, parallelism. Missing keys keep their defaults.
// Throws ConfigError.
AppConfig load_app_config(const std::filesystem::path& path);
AppConfig parse_app_config(std::string_view json_text);

PromptSet make_prompts(const AppConfig& config);
// The oracle backend plays the configured environment.
std::shared_ptr<Backend> make_backend(const AppConfig& config, const PromptSet& prompts);
std::unique_ptr<Gateway> make_gateway(const AppConfig& config, const PromptSet& prompts);

}  // namespace abbel
