#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "abbel/context.hpp"
#include "abbel/env.hpp"

namespace abbel {

inline constexpr std::string_view kInitialBelief =
    "This is the start of the game. No beliefs right now.";

// Everything needed to lay out the contexts of one environment. Template
// fields use named placeholders: {instructions} {belief} {action}
// {observation} {step} {horizon} {remaining} {belief_prompt} {action_prompt}
// {reason}. Unknown placeholders are left as written.
struct PromptSet {
  std::string instructions;   // fully rendered for the env config
  std::string belief_prompt;
  std::string action_prompt;  // may contain {step} {horizon} {remaining}
  std::string initial_belief = std::string(kInitialBelief);

  std::string belief_context_template;  // bottleneck belief update
  std::string action_context_template;  // bottleneck action selection
  std::string belief_section_template;  // belief block inside history contexts
  std::string history_header;
  std::string history_entry_template;   // {step} {action} {observation}
  std::string action_retry_template;    // {reason}
  std::string belief_retry_template;    // {reason}

  std::string action_tag = "action";
  std::string belief_tag = "belief";
  std::string think_tag = "think";
};

// Built-in prompt set for config.kind, with instructions rendered for the
// vocabulary, code length and horizon of config.
PromptSet default_prompts(const EnvConfig& config);

// Like default_prompts, but any file present in dir (instructions.txt,
// belief_prompt.txt, action_prompt.txt, belief_context.txt,
// action_context.txt, belief_section.txt, history_header.txt,
// history_entry.txt, action_retry.txt, belief_retry.txt, tags.txt,
// initial_belief.txt) replaces the built-in text.
PromptSet load_prompts(const std::filesystem::path& dir, const EnvConfig& config);

using TemplateValues = std::map<std::string, std::string, std::less<>>;

// Single pass: substituted values are never rescanned for placeholders.
std::string render_template(std::string_view tmpl, const TemplateValues& values);

Context build_belief_context(const PromptSet& prompts, std::string_view prev_belief,
                             std::string_view action_text, std::string_view observation_text);

// Depends on nothing but its arguments: no history can leak in.
Context build_action_context(const PromptSet& prompts, std::string_view belief, int step,
                             int horizon);

struct HistoryItem {
  std::string action_text;
  std::string observation_text;
};

// Full-history action context: without a belief this is the plain
// multi-step baseline; with one, the belief follows the history.
Context build_history_context(const PromptSet& prompts, std::span<const HistoryItem> history,
                              std::optional<std::string_view> belief, int step, int horizon);

// Belief update that keeps the full history in context (history includes the
// latest action and observation).
Context build_history_belief_context(const PromptSet& prompts,
                                     std::span<const HistoryItem> history,
                                     std::string_view prev_belief);

// The rendered history block alone (header plus entries); empty for an empty
// history.
std::string render_history(const PromptSet& prompts, std::span<const HistoryItem> history);

// base + the rejected generation + a user message asking for a retry.
Context build_retry_context(const Context& base, std::string_view rejected_output,
                            std::string_view retry_message);

std::string action_retry_message(const PromptSet& prompts, std::string_view reason);
std::string belief_retry_message(const PromptSet& prompts, std::string_view reason);

enum class PayloadTag { kAction, kBelief, kAnswer };

std::string_view to_string(PayloadTag tag);

enum class TagIssue {
  kNone,
  kMissingTag,
  kMalformedOpenTag,
  kMalformedCloseTag,
  kDuplicateTag,
  kUnknownTag,
  kEmptyPayload,
};

std::string_view to_string(TagIssue issue);
std::string_view describe(TagIssue issue);

struct TaggedOutput {
  std::string raw;
  std::optional<std::string> think;
  std::optional<std::string> payload;  // present iff issue == kNone
  PayloadTag payload_tag = PayloadTag::kAction;
  TagIssue issue = TagIssue::kNone;
  bool trailing_text = false;  // text after the closing tag

  bool ok() const { return payload.has_value(); }
};

// Extracts the single <tag_name>...</tag_name> pair (case-sensitive). Text
// outside the pair is ignored; the payload is whitespace-trimmed.
TaggedOutput parse_tagged(std::string_view raw, PayloadTag expected, std::string_view tag_name,
                          std::string_view think_tag = "think");
// Uses the lowercase tag name of `expected`.
TaggedOutput parse_tagged(std::string_view raw, PayloadTag expected);

// Wraps payload in the tag pair, optionally preceded by a think block.
std::string render_tagged(std::string_view payload, std::string_view tag_name,
                          std::optional<std::string_view> think = std::nullopt,
                          std::string_view think_tag = "think");

using ActionParse = std::variant<Guess, InvalidReason>;

// Accepts "['8', '6', '9']", "[8, 6, 9]", "869", "8 6 9" and, for Wordle,
// a word in any case.
ActionParse validate_action(std::string_view payload, const EnvConfig& config);

}  // namespace abbel
