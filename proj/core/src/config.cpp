#include "abbel/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "abbel/oracle_agent.hpp"
#include "json_io.hpp"

namespace abbel {
namespace {

template <typename T>
void read_if(const json& section, const char* key, T& target) {
  if (section.contains(key)) target = section.at(key).get<T>();
}

ParserKind parser_kind_from_string(std::string_view name) {
  if (name == "reference") return ParserKind::kReference;
  if (name == "llm") return ParserKind::kLlm;
  throw ConfigError(fmt::format("unknown belief parser '{}'", name));
}

RegretConvention regret_from_string(std::string_view name) {
  if (name == "count-solving-guess") return RegretConvention::kCountSolvingGuess;
  if (name == "pre-solve-only") return RegretConvention::kPreSolveOnly;
  throw ConfigError(fmt::format("unknown regret convention '{}'", name));
}

AppConfig from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("config root must be an object");
  AppConfig config;
  if (root.contains("env")) config.env = env_config_from_json(root.at("env"));
  if (root.contains("backend")) {
    const auto& b = root.at("backend");
    if (b.contains("type")) config.backend.kind = backend_kind_from_string(b.at("type").get<std::string>());
    read_if(b, "script", config.backend.script);
    if (b.contains("context_window")) config.backend.context_window = b.at("context_window").get<int>();
    read_if(b, "max_in_flight", config.backend.max_in_flight);
    if (b.contains("http")) {
      const auto& h = b.at("http");
      auto& http = config.backend.http;
      read_if(h, "base_url", http.base_url);
      read_if(h, "path", http.path);
      read_if(h, "model", http.model);
      read_if(h, "api_key_env", http.api_key_env);
      if (h.contains("timeout_s")) http.timeout = std::chrono::seconds(h.at("timeout_s").get<int>());
    }
    if (b.contains("retry")) {
      const auto& r = b.at("retry");
      auto& retry = config.backend.retry;
      read_if(r, "max_attempts", retry.max_attempts);
      read_if(r, "multiplier", retry.multiplier);
      if (r.contains("initial_backoff_ms")) {
        retry.initial_backoff = std::chrono::milliseconds(r.at("initial_backoff_ms").get<int>());
      }
      if (r.contains("max_backoff_ms")) {
        retry.max_backoff = std::chrono::milliseconds(r.at("max_backoff_ms").get<int>());
      }
    }
  }
  if (root.contains("prompts_dir")) config.prompts_dir = root.at("prompts_dir").get<std::string>();
  if (root.contains("rollout")) {
    const auto& r = root.at("rollout");
    if (r.contains("regime")) config.rollout.regime = regime_from_string(r.at("regime").get<std::string>());
    read_if(r, "temperature", config.rollout.temperature);
    read_if(r, "max_output_tokens", config.rollout.max_output_tokens);
  }
  if (root.contains("grading")) {
    const auto& g = root.at("grading");
    if (g.contains("parser")) config.grading.parser = parser_kind_from_string(g.at("parser").get<std::string>());
    read_if(g, "parser_temperature", config.grading.parser_temperature);
    read_if(g, "temperature", config.grading.grouping.temperature);
    read_if(g, "max_output_tokens", config.grading.grouping.max_output_tokens);
  }
  if (root.contains("rewards")) {
    const auto& r = root.at("rewards");
    read_if(r, "length_penalty", config.rewards.length_penalty);
    read_if(r, "penalty_scale", config.rewards.penalty_scale);
    read_if(r, "epsilon", config.rewards.epsilon);
    if (r.contains("regret")) config.rewards.regret = regret_from_string(r.at("regret").get<std::string>());
  }
  read_if(root, "parallelism", config.parallelism);
  if (config.parallelism < 1) throw ConfigError("parallelism must be at least 1");
  if (config.backend.max_in_flight < 1) throw ConfigError("max_in_flight must be at least 1");
  if (config.backend.kind == BackendKind::kScripted && config.backend.script.empty()) {
    throw ConfigError("scripted backend needs a non-empty script");
  }
  return config;
}

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kOracle: return "oracle";
    case BackendKind::kScripted: return "scripted";
    case BackendKind::kHttp: return "http";
  }
  return "unknown";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "oracle") return BackendKind::kOracle;
  if (name == "scripted") return BackendKind::kScripted;
  if (name == "http") return BackendKind::kHttp;
  throw ConfigError(fmt::format("unknown backend type '{}'", name));
}

AppConfig parse_app_config(std::string_view json_text) {
  try {
    return from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("invalid config: {}", e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("invalid config: {}", e.what()));
  }
}

AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_app_config(buffer.str());
}

PromptSet make_prompts(const AppConfig& config) {
  return config.prompts_dir ? load_prompts(*config.prompts_dir, config.env)
                            : default_prompts(config.env);
}

std::shared_ptr<Backend> make_backend(const AppConfig& config, const PromptSet& prompts) {
  switch (config.backend.kind) {
    case BackendKind::kOracle:
      return std::make_shared<OracleAgentBackend>(config.env, prompts);
    case BackendKind::kScripted: {
      auto backend = std::make_shared<ScriptedBackend>(config.backend.script);
      backend->set_context_window(config.backend.context_window);
      return backend;
    }
    case BackendKind::kHttp:
      return std::make_shared<HttpChatBackend>(config.backend.http);
  }
  throw ConfigError("unknown backend type");
}

std::unique_ptr<Gateway> make_gateway(const AppConfig& config, const PromptSet& prompts) {
  return std::make_unique<Gateway>(make_backend(config, prompts), config.backend.retry,
                                   config.backend.max_in_flight);
}

}  // namespace abbel
