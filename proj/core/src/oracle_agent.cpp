#include "abbel/oracle_agent.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "abbel/belief_format.hpp"
#include "text_util.hpp"

namespace abbel {
namespace {

constexpr std::string_view kCandidatesPrefix = "Candidates:";

std::vector<HistoryEntry> pairs_from_text(std::string_view text, const EnvConfig& config,
                                          const PromptSet& prompts) {
  std::vector<HistoryEntry> entries;
  if (config.kind == EnvKind::kMastermind) {
    std::optional<Guess> pending;
    for (auto line : split_lines(text)) {
      auto tagged = parse_tagged(line, PayloadTag::kAction, prompts.action_tag, prompts.think_tag);
      if (tagged.ok()) {
        auto action = validate_action(*tagged.payload, config);
        if (auto* guess = std::get_if<Guess>(&action)) pending = *guess;
        continue;
      }
      if (auto count = parse_count_line(line); count && pending) {
        entries.push_back({*pending, *count});
        pending.reset();
      }
    }
    return entries;
  }
  std::string guess;
  PositionalFeedback feedback;
  for (auto line : split_lines(text)) {
    auto parsed = parse_feedback_line(line, config);
    if (parsed && parsed->position == 0) {
      guess.clear();
      feedback.marks.clear();
    }
    // Feedback lines of one observation are consecutive; absent lines carry
    // no position and take the next one.
    if (!parsed || (parsed->position >= 0 && parsed->position != static_cast<int>(guess.size()))) {
      guess.clear();
      feedback.marks.clear();
      continue;
    }
    guess.push_back(parsed->ch);
    feedback.marks.push_back(parsed->mark);
    if (static_cast<int>(guess.size()) == config.code_length) {
      if (!check_guess(guess, config)) entries.push_back({Guess{guess}, feedback});
      guess.clear();
      feedback.marks.clear();
    }
  }
  return entries;
}

}  // namespace

Guess oracle_agent(const ExactPosterior& posterior) {
  if (posterior.candidates.empty()) {
    throw DegenerateHistoryError("no candidate left to guess");
  }
  return Guess{posterior.candidates.front()};
}

ExactPosterior posterior_from_text(std::string_view text, const EnvConfig& config,
                                   const PromptSet& prompts) {
  std::optional<std::string_view> candidates_line;
  for (auto line : split_lines(text)) {
    auto t = trim(line);
    if (t.starts_with(kCandidatesPrefix)) {
      auto rest = t.substr(kCandidatesPrefix.size());
      candidates_line = rest.substr(0, rest.find('<'));
    }
  }
  ExactPosterior posterior{config, {}};
  if (candidates_line) {
    std::string_view rest = *candidates_line;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      auto token = trim(rest.substr(0, comma));
      if (!token.empty() && !check_guess(token, config)) posterior.candidates.emplace_back(token);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    std::sort(posterior.candidates.begin(), posterior.candidates.end(),
              [&](const std::string& a, const std::string& b) {
                return std::lexicographical_compare(
                    a.begin(), a.end(), b.begin(), b.end(),
                    [&](char x, char y) { return config.vocab_index(x) < config.vocab_index(y); });
              });
  } else {
    posterior = hypothesis_space(config);
  }
  const auto entries = pairs_from_text(text, config, prompts);
  return filter(posterior, entries);
}

std::string oracle_belief(const ExactPosterior& posterior) {
  return fmt::format("{}\n{} {}", render_canonical_belief(project(posterior)), kCandidatesPrefix,
                     join(posterior.candidates, ", "));
}

OracleAgentBackend::OracleAgentBackend(EnvConfig config, PromptSet prompts)
    : config_(std::move(config)), prompts_(std::move(prompts)) {
  config_.validate();
}

CompletionResult OracleAgentBackend::complete(const CompletionRequest& request) {
  const auto text = flatten(request.context);
  const auto posterior = posterior_from_text(text, config_, prompts_);
  // A retry context ends with assistant reply and retry message; the
  // original prompt precedes them.
  const auto& context = request.context;
  const bool retry = context.size() >= 3 && context[context.size() - 2].role == "assistant";
  const auto& last = context[context.size() - (retry ? 3 : 1)].content;
  const bool belief_call = trim(last).ends_with(trim(prompts_.belief_prompt));

  CompletionResult result;
  if (belief_call) {
    result.text = render_tagged(oracle_belief(posterior), prompts_.belief_tag);
  } else {
    result.text =
        render_tagged(format_action(oracle_agent(posterior), config_), prompts_.action_tag);
  }
  for (const auto& message : request.context) {
    result.input_tokens += fallback_token_count(message.content);
  }
  result.output_tokens = fallback_token_count(result.text);
  result.backend_id = id();
  result.tokens_estimated = true;
  return result;
}

}  // namespace abbel
