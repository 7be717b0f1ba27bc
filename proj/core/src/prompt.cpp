#include "abbel/prompt.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "abbel/resources.hpp"
#include "text_util.hpp"

namespace abbel {
namespace {

std::string_view prompt_dir(EnvKind kind) {
  switch (kind) {
    case EnvKind::kCombinationLock: return "combination_lock";
    case EnvKind::kWordle: return "wordle";
    case EnvKind::kMastermind: return "mastermind";
  }
  return "combination_lock";
}

std::string number_word(int n) {
  static constexpr std::array<std::string_view, 11> kWords = {
      "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};
  if (n >= 0 && n < static_cast<int>(kWords.size())) return std::string(kWords[n]);
  return std::to_string(n);
}

TemplateValues static_values(const EnvConfig& config) {
  std::vector<std::string> positions;
  std::vector<std::string> chars;
  std::vector<std::string> short_chars;
  for (int i = 1; i <= config.code_length; ++i) {
    positions.push_back(fmt::format("Position {}", i));
    chars.push_back(fmt::format("'char {}'", i));
    short_chars.push_back(fmt::format("'c{}'", i));
  }
  return {
      {"position_list", join(positions, ", ")},
      {"char_list", join(chars, ", ")},
      {"short_char_list", join(short_chars, ",")},
      {"code_length", std::to_string(config.code_length)},
      {"code_length_word", number_word(config.code_length)},
      {"vocabulary_list", format_char_list(config.vocabulary)},
      {"horizon", std::to_string(config.horizon)},
  };
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename Lookup>
PromptSet assemble(const EnvConfig& config, Lookup&& lookup) {
  const auto values = static_values(config);
  auto text = [&](std::string_view file) { return render_template(lookup(file), values); };

  PromptSet prompts;
  prompts.instructions = text("instructions.txt");
  prompts.belief_prompt = text("belief_prompt.txt");
  prompts.action_prompt = text("action_prompt.txt");
  prompts.belief_context_template = lookup("belief_context.txt");
  prompts.action_context_template = lookup("action_context.txt");
  prompts.belief_section_template = lookup("belief_section.txt");
  prompts.history_header = text("history_header.txt");
  prompts.history_entry_template = lookup("history_entry.txt");
  prompts.action_retry_template = text("action_retry.txt");
  prompts.belief_retry_template = text("belief_retry.txt");
  if (auto initial = lookup("initial_belief.txt"); !initial.empty()) {
    prompts.initial_belief = std::string(trim(initial));
  }
  const auto tag_text = lookup("tags.txt");
  auto tags = split_lines(tag_text);
  if (tags.size() >= 3) {
    prompts.action_tag = std::string(trim(tags[0]));
    prompts.belief_tag = std::string(trim(tags[1]));
    prompts.think_tag = std::string(trim(tags[2]));
  }
  return prompts;
}

std::string builtin_text(EnvKind kind, std::string_view file) {
  auto resource = embedded_resource(fmt::format("prompts/{}/{}", prompt_dir(kind), file));
  return resource ? std::string(*resource) : std::string();
}

std::string render_action_prompt(const PromptSet& prompts, int step, int horizon) {
  return render_template(prompts.action_prompt,
                         {{"step", std::to_string(step)},
                          {"horizon", std::to_string(horizon)},
                          {"remaining", std::to_string(horizon - step + 1)}});
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

bool looks_like_tag(std::string_view raw, std::string_view ignore) {
  for (auto pos = raw.find('<'); pos != std::string_view::npos; pos = raw.find('<', pos + 1)) {
    auto end = raw.find('>', pos);
    if (end == std::string_view::npos) return false;
    auto name = raw.substr(pos + 1, end - pos - 1);
    if (!name.empty() && name.front() == '/') name.remove_prefix(1);
    if (name.empty() || name == ignore) continue;
    bool word = true;
    for (char c : name) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') word = false;
    }
    if (word) return true;
  }
  return false;
}

// Strips one layer of ASCII or UTF-8 typographic quotes.
std::string_view strip_quotes(std::string_view s) {
  s = trim(s);
  static constexpr std::array<std::string_view, 7> kQuotes = {"'", "\"", "`", "‘", "’",
                                                               "“", "”"};
  for (auto q : kQuotes) {
    if (s.starts_with(q)) {
      s.remove_prefix(q.size());
      break;
    }
  }
  for (auto q : kQuotes) {
    if (s.ends_with(q)) {
      s.remove_suffix(q.size());
      break;
    }
  }
  return trim(s);
}

}  // namespace

std::uint64_t hash_context(const Context& context) {
  std::uint64_t hash = fnv1a("");
  for (const auto& message : context) {
    hash = fnv1a(message.role, hash);
    hash = fnv1a(std::string_view("\x1f", 1), hash);
    hash = fnv1a(message.content, hash);
    hash = fnv1a(std::string_view("\x1e", 1), hash);
  }
  return hash;
}

std::string flatten(const Context& context) {
  std::string out;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += context[i].content;
  }
  return out;
}

PromptSet default_prompts(const EnvConfig& config) {
  return assemble(config, [&](std::string_view file) { return builtin_text(config.kind, file); });
}

PromptSet load_prompts(const std::filesystem::path& dir, const EnvConfig& config) {
  return assemble(config, [&](std::string_view file) {
    auto path = dir / file;
    if (std::filesystem::exists(path)) return read_file(path);
    return builtin_text(config.kind, file);
  });
}

std::string render_template(std::string_view tmpl, const TemplateValues& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = tmpl.find('}', open + 1);
    if (close == std::string_view::npos) break;
    auto name = tmpl.substr(open + 1, close - open - 1);
    out.append(tmpl.substr(pos, open - pos));
    if (auto it = values.find(name); it != values.end()) {
      out += it->second;
      pos = close + 1;
    } else {
      out += '{';
      pos = open + 1;
    }
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));
  return out;
}

Context build_belief_context(const PromptSet& prompts, std::string_view prev_belief,
                             std::string_view action_text, std::string_view observation_text) {
  auto text = render_template(prompts.belief_context_template,
                              {{"instructions", prompts.instructions},
                               {"belief", std::string(prev_belief)},
                               {"action", std::string(action_text)},
                               {"observation", std::string(observation_text)},
                               {"belief_prompt", prompts.belief_prompt}});
  return {{"user", std::move(text)}};
}

Context build_action_context(const PromptSet& prompts, std::string_view belief, int step,
                             int horizon) {
  auto text = render_template(prompts.action_context_template,
                              {{"instructions", prompts.instructions},
                               {"belief", std::string(belief)},
                               {"action_prompt", render_action_prompt(prompts, step, horizon)},
                               {"step", std::to_string(step)},
                               {"horizon", std::to_string(horizon)},
                               {"remaining", std::to_string(horizon - step + 1)}});
  return {{"user", std::move(text)}};
}

std::string render_history(const PromptSet& prompts, std::span<const HistoryItem> history) {
  if (history.empty()) return {};
  std::vector<std::string> parts{prompts.history_header};
  for (std::size_t i = 0; i < history.size(); ++i) {
    parts.push_back(render_template(prompts.history_entry_template,
                                    {{"step", std::to_string(i + 1)},
                                     {"action", history[i].action_text},
                                     {"observation", history[i].observation_text}}));
  }
  return join(parts, "\n\n");
}

Context build_history_context(const PromptSet& prompts, std::span<const HistoryItem> history,
                              std::optional<std::string_view> belief, int step, int horizon) {
  std::vector<std::string> parts{prompts.instructions};
  if (!history.empty()) parts.push_back(render_history(prompts, history));
  if (belief) {
    parts.push_back(render_template(prompts.belief_section_template,
                                    {{"belief", std::string(*belief)}}));
  }
  parts.push_back(render_action_prompt(prompts, step, horizon));
  return {{"user", join(parts, "\n\n")}};
}

Context build_history_belief_context(const PromptSet& prompts,
                                     std::span<const HistoryItem> history,
                                     std::string_view prev_belief) {
  std::vector<std::string> parts{prompts.instructions};
  if (!history.empty()) parts.push_back(render_history(prompts, history));
  parts.push_back(render_template(prompts.belief_section_template,
                                  {{"belief", std::string(prev_belief)}}));
  parts.push_back(prompts.belief_prompt);
  return {{"user", join(parts, "\n\n")}};
}

Context build_retry_context(const Context& base, std::string_view rejected_output,
                            std::string_view retry_message) {
  Context context = base;
  context.push_back({"assistant", std::string(rejected_output)});
  context.push_back({"user", std::string(retry_message)});
  return context;
}

std::string action_retry_message(const PromptSet& prompts, std::string_view reason) {
  return render_template(prompts.action_retry_template, {{"reason", std::string(reason)}});
}

std::string belief_retry_message(const PromptSet& prompts, std::string_view reason) {
  return render_template(prompts.belief_retry_template, {{"reason", std::string(reason)}});
}

std::string_view to_string(PayloadTag tag) {
  switch (tag) {
    case PayloadTag::kAction: return "action";
    case PayloadTag::kBelief: return "belief";
    case PayloadTag::kAnswer: return "answer";
  }
  return "action";
}

std::string_view to_string(TagIssue issue) {
  switch (issue) {
    case TagIssue::kNone: return "None";
    case TagIssue::kMissingTag: return "MissingTag";
    case TagIssue::kMalformedOpenTag: return "MalformedOpenTag";
    case TagIssue::kMalformedCloseTag: return "MalformedCloseTag";
    case TagIssue::kDuplicateTag: return "DuplicateTag";
    case TagIssue::kUnknownTag: return "UnknownTag";
    case TagIssue::kEmptyPayload: return "EmptyPayload";
  }
  return "Unknown";
}

std::string_view describe(TagIssue issue) {
  switch (issue) {
    case TagIssue::kNone: return "well formed";
    case TagIssue::kMissingTag: return "the required tags were not found";
    case TagIssue::kMalformedOpenTag: return "the opening tag is malformed";
    case TagIssue::kMalformedCloseTag: return "the closing tag is missing or malformed";
    case TagIssue::kDuplicateTag: return "the tags appear more than once";
    case TagIssue::kUnknownTag: return "an unrecognised tag was used";
    case TagIssue::kEmptyPayload: return "the tags are empty";
  }
  return "malformed";
}

TaggedOutput parse_tagged(std::string_view raw, PayloadTag expected, std::string_view tag_name,
                          std::string_view think_tag) {
  TaggedOutput out;
  out.raw = std::string(raw);
  out.payload_tag = expected;

  const auto think_open = fmt::format("<{}>", think_tag);
  const auto think_close = fmt::format("</{}>", think_tag);
  if (auto a = raw.find(think_open); a != std::string_view::npos) {
    auto b = raw.find(think_close, a);
    if (b != std::string_view::npos) {
      out.think = std::string(trim(raw.substr(a + think_open.size(), b - a - think_open.size())));
    }
  }

  const auto open = fmt::format("<{}>", tag_name);
  const auto close = fmt::format("</{}>", tag_name);
  const auto opens = count_occurrences(raw, open);
  const auto closes = count_occurrences(raw, close);

  if (opens == 1 && closes == 1) {
    const auto a = raw.find(open);
    const auto b = raw.find(close);
    if (a > b) {
      out.issue = TagIssue::kMalformedOpenTag;
      return out;
    }
    auto payload = trim(raw.substr(a + open.size(), b - a - open.size()));
    if (payload.empty()) {
      out.issue = TagIssue::kEmptyPayload;
      return out;
    }
    out.payload = std::string(payload);
    out.trailing_text = !trim(raw.substr(b + close.size())).empty();
    return out;
  }
  if (opens > 1 || closes > 1) {
    out.issue = TagIssue::kDuplicateTag;
  } else if (closes == 1) {
    out.issue = TagIssue::kMalformedOpenTag;
  } else if (opens == 1) {
    out.issue = TagIssue::kMalformedCloseTag;
  } else if (raw.find(fmt::format("{}>", tag_name)) != std::string_view::npos ||
             raw.find(fmt::format("<{}", tag_name)) != std::string_view::npos) {
    out.issue = TagIssue::kMalformedOpenTag;
  } else if (looks_like_tag(raw, think_tag)) {
    out.issue = TagIssue::kUnknownTag;
  } else {
    out.issue = TagIssue::kMissingTag;
  }
  return out;
}

TaggedOutput parse_tagged(std::string_view raw, PayloadTag expected) {
  return parse_tagged(raw, expected, to_string(expected));
}

std::string render_tagged(std::string_view payload, std::string_view tag_name,
                          std::optional<std::string_view> think, std::string_view think_tag) {
  std::string out;
  if (think) out += fmt::format("<{0}>{1}</{0}>", think_tag, *think);
  out += fmt::format("<{0}>{1}</{0}>", tag_name, payload);
  return out;
}

ActionParse validate_action(std::string_view payload, const EnvConfig& config) {
  auto text = trim(payload);
  if (text.empty()) return InvalidReason::kUnparseable;

  std::string chars;
  if (config.kind == EnvKind::kWordle) {
    auto word = text;
    while (!word.empty() && (word.back() == '.' || word.back() == '!')) word.remove_suffix(1);
    word = strip_quotes(word);
    if (word.starts_with('[') && word.ends_with(']')) word = strip_quotes(word.substr(1, word.size() - 2));
    for (char c : word) {
      if (!std::isalpha(static_cast<unsigned char>(c))) return InvalidReason::kUnparseable;
    }
    chars = to_lower(word);
  } else {
    std::vector<std::string_view> elements;
    auto split = [&](std::string_view body, bool whitespace_too) {
      std::size_t start = 0;
      for (std::size_t i = 0; i <= body.size(); ++i) {
        const bool sep = i == body.size() || body[i] == ',' ||
                         (whitespace_too && std::isspace(static_cast<unsigned char>(body[i])));
        if (!sep) continue;
        auto token = body.substr(start, i - start);
        if (whitespace_too && trim(token).empty()) {
          start = i + 1;
          continue;
        }
        elements.push_back(token);
        start = i + 1;
      }
    };
    if (text.starts_with('[') && text.ends_with(']')) {
      split(text.substr(1, text.size() - 2), false);
    } else if (text.find_first_of(", \t\n") != std::string_view::npos) {
      split(text, true);
    } else {
      auto bare = strip_quotes(text);
      for (std::size_t i = 0; i < bare.size(); ++i) elements.push_back(bare.substr(i, 1));
    }
    for (auto element : elements) {
      auto c = strip_quotes(element);
      if (c.size() != 1) return InvalidReason::kUnparseable;
      chars += c.front();
    }
  }
  if (auto reason = check_guess(chars, config)) return *reason;
  return Guess{std::move(chars)};
}

}  // namespace abbel
