#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace abbel {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

using Context = std::vector<ChatMessage>;

// Stable 64-bit FNV-1a hash over roles and contents.
std::uint64_t hash_context(const Context& context);

// All message contents joined by blank lines.
std::string flatten(const Context& context);

}  // namespace abbel
