#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "abbel/context.hpp"

namespace abbel {

struct CompletionRequest {
  Context context;
  double temperature = 1.0;
  int max_output_tokens = 1024;
  std::optional<std::uint64_t> seed_hint;
};

struct CompletionResult {
  std::string text;
  int input_tokens = 0;
  int output_tokens = 0;
  std::int64_t latency_ms = 0;
  std::string backend_id;
  bool tokens_estimated = false;

  friend bool operator==(const CompletionResult&, const CompletionResult&) = default;
};

class GatewayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transient; retried by the gateway.
class TransportError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class AuthError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class ContextTooLongError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// ceil(words * 1.3), whitespace-delimited words.
int fallback_token_count(std::string_view text);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
  virtual std::string id() const = 0;
  // Exact tokenizer count when the backend has one.
  virtual std::optional<int> count_tokens(std::string_view) const { return std::nullopt; }
};

// Replies with script[h % size] where h mixes the context hash and seed_hint,
// so a reply is a pure function of (script, context, seed_hint).
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> script, std::string id = "scripted");

  // Requests whose estimated input exceeds this many tokens raise
  // ContextTooLongError.
  void set_context_window(std::optional<int> tokens) { context_window_ = tokens; }

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return id_; }

 private:
  std::vector<std::string> script_;
  std::string id_;
  std::optional<int> context_window_;
};

// Replies through a user function; tokens come from the fallback counter.
class CallbackBackend : public Backend {
 public:
  using Responder = std::function<std::string(const CompletionRequest&)>;
  explicit CallbackBackend(Responder responder, std::string id = "callback");

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return id_; }

 private:
  Responder responder_;
  std::string id_;
};

struct HttpBackendOptions {
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "ABBEL_API_KEY";
  std::chrono::seconds timeout{120};
};

// Chat-completions wire format over HTTP(S).
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override;

 private:
  HttpBackendOptions options_;
  std::string api_key_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
};

// Thread-safe front for one backend: caps requests in flight, retries
// TransportError with exponential backoff and fills missing token counts.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy = {},
                   int max_in_flight = 8);

  CompletionResult complete(const CompletionRequest& request);
  // Backend tokenizer when available, otherwise the fallback (estimated).
  int count_tokens(std::string_view text, bool* estimated = nullptr) const;

  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }
  const Backend& backend() const { return *backend_; }
  int max_in_flight() const { return max_in_flight_; }
  int peak_in_flight() const;

 private:
  std::shared_ptr<Backend> backend_;
  RetryPolicy policy_;
  int max_in_flight_;
  Sleeper sleeper_;

  mutable std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  int peak_in_flight_ = 0;
};

}  // namespace abbel
