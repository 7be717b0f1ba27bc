#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "abbel/gateway.hpp"
#include "text_util.hpp"

namespace abbel {
namespace {

using nlohmann::json;

bool mentions_context_length(std::string_view body) {
  const auto lower = to_lower(body);
  return lower.find("context_length") != std::string::npos ||
         lower.find("context length") != std::string::npos ||
         lower.find("maximum context") != std::string::npos ||
         lower.find("too many tokens") != std::string::npos;
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (const char* key = std::getenv(options_.api_key_env.c_str())) api_key_ = key;
}

std::string HttpChatBackend::id() const {
  return fmt::format("http:{}", options_.model);
}

CompletionResult HttpChatBackend::complete(const CompletionRequest& request) {
  json messages = json::array();
  for (const auto& message : request.context) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  json body = {{"model", options_.model},
               {"messages", std::move(messages)},
               {"temperature", request.temperature},
               {"max_tokens", request.max_output_tokens}};
  if (request.seed_hint) body["seed"] = *request.seed_hint % (1ULL << 31);

  httplib::Client client(options_.base_url);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto start = std::chrono::steady_clock::now();
  auto response = client.Post(options_.path, headers, body.dump(), "application/json");
  const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  if (!response) {
    throw TransportError(fmt::format("request to {} failed: {}", options_.base_url,
                                     httplib::to_string(response.error())));
  }
  const int status = response->status;
  if (status == 401 || status == 403) {
    throw AuthError(fmt::format("backend rejected credentials (HTTP {})", status));
  }
  if (status == 400 && mentions_context_length(response->body)) {
    throw ContextTooLongError(fmt::format("backend reported context too long: {}", response->body));
  }
  if (status == 429 || status >= 500) {
    throw TransportError(fmt::format("backend returned HTTP {}", status));
  }
  if (status != 200) {
    throw GatewayError(fmt::format("backend returned HTTP {}: {}", status, response->body));
  }

  json reply;
  try {
    reply = json::parse(response->body);
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("malformed backend response: {}", e.what()));
  }
  CompletionResult result;
  result.backend_id = id();
  result.latency_ms = latency;
  try {
    result.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(fmt::format("backend response lacks a message: {}", e.what()));
  }
  if (reply.contains("usage") && reply["usage"].is_object()) {
    const auto& usage = reply["usage"];
    result.input_tokens = usage.value("prompt_tokens", 0);
    result.output_tokens = usage.value("completion_tokens", 0);
  } else {
    for (const auto& message : request.context) {
      result.input_tokens += fallback_token_count(message.content);
    }
    result.output_tokens = fallback_token_count(result.text);
    result.tokens_estimated = true;
  }
  return result;
}

}  // namespace abbel
