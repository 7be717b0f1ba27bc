#include "abbel/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "text_util.hpp"

namespace abbel {
namespace {

int context_tokens(const Context& context) {
  int total = 0;
  for (const auto& message : context) total += fallback_token_count(message.content);
  return total;
}

class SlotGuard {
 public:
  SlotGuard(std::mutex& mutex, std::condition_variable& cv, int& in_flight, int& peak, int cap)
      : mutex_(mutex), cv_(cv), in_flight_(in_flight) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < cap; });
    ++in_flight_;
    peak = std::max(peak, in_flight_);
  }
  ~SlotGuard() {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    cv_.notify_one();
  }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::mutex& mutex_;
  std::condition_variable& cv_;
  int& in_flight_;
};

}  // namespace

int fallback_token_count(std::string_view text) {
  long words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return static_cast<int>((words * 13 + 9) / 10);
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> script, std::string id)
    : script_(std::move(script)), id_(std::move(id)) {
  if (script_.empty()) throw std::invalid_argument("scripted backend needs at least one reply");
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& request) {
  const int input = context_tokens(request.context);
  if (context_window_ && input > *context_window_) {
    throw ContextTooLongError(
        fmt::format("context of {} tokens exceeds the {}-token window", input, *context_window_));
  }
  const auto h = mix64(hash_context(request.context) ^ mix64(request.seed_hint.value_or(0)));
  CompletionResult result;
  result.text = script_[h % script_.size()];
  result.input_tokens = input;
  result.output_tokens = fallback_token_count(result.text);
  result.backend_id = id_;
  result.tokens_estimated = true;
  return result;
}

CallbackBackend::CallbackBackend(Responder responder, std::string id)
    : responder_(std::move(responder)), id_(std::move(id)) {}

CompletionResult CallbackBackend::complete(const CompletionRequest& request) {
  CompletionResult result;
  result.text = responder_(request);
  result.input_tokens = context_tokens(request.context);
  result.output_tokens = fallback_token_count(result.text);
  result.backend_id = id_;
  result.tokens_estimated = true;
  return result;
}

Gateway::Gateway(std::shared_ptr<Backend> backend, RetryPolicy policy, int max_in_flight)
    : backend_(std::move(backend)),
      policy_(policy),
      max_in_flight_(max_in_flight),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!backend_) throw std::invalid_argument("gateway needs a backend");
  if (max_in_flight_ < 1) throw std::invalid_argument("max_in_flight must be at least 1");
  if (policy_.max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");
}

CompletionResult Gateway::complete(const CompletionRequest& request) {
  if (request.context.empty()) throw std::invalid_argument("completion request has no messages");
  auto backoff = policy_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      CompletionResult result;
      {
        SlotGuard slot(mutex_, slot_free_, in_flight_, peak_in_flight_, max_in_flight_);
        const auto start = std::chrono::steady_clock::now();
        result = backend_->complete(request);
        if (result.latency_ms == 0) {
          result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - start)
                                  .count();
        }
      }
      if (result.backend_id.empty()) result.backend_id = backend_->id();
      return result;
    } catch (const TransportError& e) {
      if (attempt >= policy_.max_attempts) {
        throw TransportError(
            fmt::format("giving up after {} attempts: {}", attempt, e.what()));
      }
      spdlog::warn("transport error on attempt {}: {}; retrying in {} ms", attempt, e.what(),
                   backoff.count());
      sleeper_(backoff);
      backoff = std::min(policy_.max_backoff,
                         std::chrono::milliseconds(static_cast<std::int64_t>(
                             static_cast<double>(backoff.count()) * policy_.multiplier)));
    }
  }
}

int Gateway::count_tokens(std::string_view text, bool* estimated) const {
  if (auto exact = backend_->count_tokens(text)) {
    if (estimated) *estimated = false;
    return *exact;
  }
  if (estimated) *estimated = true;
  return fallback_token_count(text);
}

int Gateway::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_in_flight_;
}

}  // namespace abbel
