#include "abbel/env.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "abbel/resources.hpp"
#include "text_util.hpp"

namespace abbel {
namespace {

constexpr int kMaxCodeLength = 16;
constexpr std::array<std::string_view, 10> kOrdinals = {
    "First", "Second", "Third", "Fourth", "Fifth",
    "Sixth", "Seventh", "Eighth", "Ninth", "Tenth"};

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

// Falling factorial n * (n-1) * ... * (n-k+1).
std::uint64_t permutations(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t result = 1;
  for (std::uint64_t i = 0; i < k; ++i) result = saturating_mul(result, n - i);
  return result;
}

bool is_positional(const EnvConfig& config) { return config.kind != EnvKind::kMastermind; }

// Two-pass match: exact positions first, then leftmost unused secret
// occurrences for the remaining guess characters.
template <typename OnMark>
void match(std::string_view secret, std::string_view guess, OnMark&& on_mark) {
  std::array<bool, kMaxCodeLength> used{};
  std::array<bool, kMaxCodeLength> exact{};
  const std::size_t n = guess.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (guess[i] == secret[i]) {
      exact[i] = true;
      used[i] = true;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (exact[i]) {
      on_mark(i, Mark::kCorrectPosition);
      continue;
    }
    Mark mark = Mark::kAbsent;
    for (std::size_t j = 0; j < n; ++j) {
      if (!used[j] && secret[j] == guess[i]) {
        used[j] = true;
        mark = Mark::kPresentWrongPosition;
        break;
      }
    }
    on_mark(i, mark);
  }
}

std::string ordinal(int position) {
  if (position >= 0 && position < static_cast<int>(kOrdinals.size())) {
    return std::string(kOrdinals[position]);
  }
  return fmt::format("Letter {}", position + 1);
}

std::optional<int> parse_int(std::string_view s) {
  if (s.empty() || s.size() > 9) return std::nullopt;
  int value = 0;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

// The single character immediately before `at`, provided it starts a token.
std::optional<char> char_before(std::string_view line, std::size_t at) {
  if (at == 0) return std::nullopt;
  if (at >= 2 && !std::isspace(static_cast<unsigned char>(line[at - 2])) &&
      line[at - 2] != ':') {
    return std::nullopt;
  }
  return line[at - 1];
}

std::optional<FeedbackLine> parse_lock_line(std::string_view line, const EnvConfig& config) {
  constexpr std::string_view kCorrect = " is in Position ";
  constexpr std::string_view kWrong = " is not in Position ";
  constexpr std::string_view kWrongTail = ", but is in the lock";
  constexpr std::string_view kAbsent = " is not in the lock";

  if (auto at = line.find(kCorrect); at != std::string_view::npos) {
    auto c = char_before(line, at);
    auto rest = line.substr(at + kCorrect.size());
    if (!c || rest.empty() || rest.back() != '!') return std::nullopt;
    auto pos = parse_int(rest.substr(0, rest.size() - 1));
    if (!pos || *pos < 1 || *pos > config.code_length) return std::nullopt;
    return FeedbackLine{*pos - 1, *c, Mark::kCorrectPosition};
  }
  if (auto at = line.find(kWrong); at != std::string_view::npos) {
    auto c = char_before(line, at);
    auto rest = line.substr(at + kWrong.size());
    if (!c || !rest.ends_with(kWrongTail)) return std::nullopt;
    auto pos = parse_int(rest.substr(0, rest.size() - kWrongTail.size()));
    if (!pos || *pos < 1 || *pos > config.code_length) return std::nullopt;
    return FeedbackLine{*pos - 1, *c, Mark::kPresentWrongPosition};
  }
  if (line.ends_with(kAbsent)) {
    auto at = line.size() - kAbsent.size();
    auto c = char_before(line, at);
    if (!c) return std::nullopt;
    return FeedbackLine{-1, *c, Mark::kAbsent};
  }
  return std::nullopt;
}

std::optional<FeedbackLine> parse_wordle_line(std::string_view line) {
  constexpr std::string_view kLetter = " letter, ";
  auto at = line.find(kLetter);
  if (at == std::string_view::npos) return std::nullopt;
  auto head = line.substr(0, at);
  auto space = head.find_last_of(' ');
  auto word = space == std::string_view::npos ? head : head.substr(space + 1);
  int position = -1;
  for (std::size_t i = 0; i < kOrdinals.size(); ++i) {
    if (word == kOrdinals[i]) position = static_cast<int>(i);
  }
  if (position < 0) return std::nullopt;
  auto rest = line.substr(at + kLetter.size());
  if (rest.size() < 3 || rest[1] != ',') return std::nullopt;
  const char c = rest[0];
  auto tail = rest.substr(2);
  if (tail == " is not in the target word") return FeedbackLine{position, c, Mark::kAbsent};
  if (tail == " is correct and in the correct position in the target word") {
    return FeedbackLine{position, c, Mark::kCorrectPosition};
  }
  if (tail == " is in the target word but in the wrong position") {
    return FeedbackLine{position, c, Mark::kPresentWrongPosition};
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::kCombinationLock: return "combination_lock";
    case EnvKind::kWordle: return "wordle";
    case EnvKind::kMastermind: return "mastermind";
  }
  return "unknown";
}

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "combination_lock" || name == "lock") return EnvKind::kCombinationLock;
  if (name == "wordle") return EnvKind::kWordle;
  if (name == "mastermind") return EnvKind::kMastermind;
  throw ConfigError(fmt::format("unknown environment kind '{}'", name));
}

void EnvConfig::validate() const {
  if (vocabulary.empty()) throw ConfigError("vocabulary is empty");
  for (std::size_t i = 0; i < vocabulary.size(); ++i) {
    if (std::isspace(static_cast<unsigned char>(vocabulary[i]))) {
      throw ConfigError("vocabulary contains whitespace");
    }
    if (vocabulary.find(vocabulary[i], i + 1) != std::string::npos) {
      throw ConfigError(fmt::format("vocabulary character '{}' is repeated", vocabulary[i]));
    }
  }
  if (code_length <= 0) throw ConfigError("code_length must be positive");
  if (code_length > kMaxCodeLength) {
    throw ConfigError(fmt::format("code_length must be at most {}", kMaxCodeLength));
  }
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (unique_chars && code_length > static_cast<int>(vocabulary.size())) {
    throw ConfigError(fmt::format("unique_chars requires code_length ({}) <= vocabulary size ({})",
                                  code_length, vocabulary.size()));
  }
  switch (kind) {
    case EnvKind::kCombinationLock:
      if (!unique_chars) throw ConfigError("combination lock requires unique_chars");
      break;
    case EnvKind::kMastermind:
      if (unique_chars) throw ConfigError("mastermind does not use unique_chars");
      break;
    case EnvKind::kWordle:
      if (!word_list || word_list->empty()) throw ConfigError("wordle requires a word list");
      if (code_length > static_cast<int>(kOrdinals.size())) {
        throw ConfigError("wordle feedback supports at most 10 letters");
      }
      for (const auto& word : *word_list) {
        if (static_cast<int>(word.size()) != code_length) {
          throw ConfigError(fmt::format("word '{}' does not have length {}", word, code_length));
        }
        for (char c : word) {
          if (vocab_index(c) < 0) {
            throw ConfigError(fmt::format("word '{}' uses a character outside the vocabulary", word));
          }
        }
      }
      if (!std::is_sorted(word_list->begin(), word_list->end())) {
        throw ConfigError("word list must be sorted");
      }
      break;
  }
}

int EnvConfig::vocab_index(char c) const {
  auto pos = vocabulary.find(c);
  return pos == std::string::npos ? -1 : static_cast<int>(pos);
}

std::string EnvConfig::describe() const {
  if (kind == EnvKind::kWordle) {
    return fmt::format("wordle[{};L={};H={}]", word_list_source, code_length, horizon);
  }
  return fmt::format("{}[{};L={};H={}]", to_string(kind), vocabulary, code_length, horizon);
}

bool operator==(const EnvConfig& a, const EnvConfig& b) {
  if (a.kind != b.kind || a.vocabulary != b.vocabulary || a.code_length != b.code_length ||
      a.horizon != b.horizon || a.unique_chars != b.unique_chars) {
    return false;
  }
  if (a.kind != EnvKind::kWordle) return true;
  if (a.word_list == b.word_list) return true;
  if (!a.word_list || !b.word_list) return false;
  return *a.word_list == *b.word_list;
}

EnvConfig combination_lock_config(std::string vocabulary, int horizon, int code_length) {
  EnvConfig config;
  config.kind = EnvKind::kCombinationLock;
  config.vocabulary = std::move(vocabulary);
  config.code_length = code_length;
  config.horizon = horizon;
  config.unique_chars = true;
  config.validate();
  return config;
}

EnvConfig mastermind_config(std::string vocabulary, int code_length, int horizon) {
  EnvConfig config;
  config.kind = EnvKind::kMastermind;
  config.vocabulary = std::move(vocabulary);
  config.code_length = code_length;
  config.horizon = horizon;
  config.unique_chars = false;
  config.validate();
  return config;
}

EnvConfig wordle_config(std::shared_ptr<const WordList> words, int horizon, std::string source) {
  EnvConfig config;
  config.kind = EnvKind::kWordle;
  config.vocabulary = "abcdefghijklmnopqrstuvwxyz";
  config.code_length = (words && !words->empty()) ? static_cast<int>(words->front().size()) : 5;
  config.horizon = horizon;
  config.unique_chars = false;
  config.word_list = std::move(words);
  config.word_list_source = std::move(source);
  config.validate();
  return config;
}

namespace {

std::shared_ptr<const WordList> words_from_text(std::string_view text) {
  WordList words;
  for (auto line : split_lines(text)) {
    auto word = to_lower(trim(line));
    if (!word.empty()) words.push_back(std::move(word));
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return std::make_shared<const WordList>(std::move(words));
}

}  // namespace

std::shared_ptr<const WordList> builtin_wordle_answers() {
  static const std::shared_ptr<const WordList> words = [] {
    auto text = embedded_resource("wordle_answers.txt");
    if (!text) throw ConfigError("builtin word list missing from build");
    return words_from_text(*text);
  }();
  return words;
}

std::shared_ptr<const WordList> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read word list '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return words_from_text(buffer.str());
}

std::shared_ptr<const WordList> resolve_word_list(const std::string& source) {
  if (source.empty() || source == "builtin") return builtin_wordle_answers();
  return load_word_list(source);
}

EnvConfig preset_config(std::string_view name) {
  if (name == "lock-train") return combination_lock_config("0123456789", 12);
  if (name == "lock-train-9") return combination_lock_config("012345689", 12);
  if (name == "lock-test") return combination_lock_config("qawsedrftgyhujik", 16);
  if (name == "wordle") return wordle_config(builtin_wordle_answers(), 6);
  if (name == "mastermind") return mastermind_config();
  throw ConfigError(fmt::format("unknown environment preset '{}'", name));
}

std::vector<std::string> preset_names() {
  return {"lock-train", "lock-train-9", "lock-test", "wordle", "mastermind"};
}

std::string_view to_string(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::kWrongLength: return "WrongLength";
    case InvalidReason::kRepeatedChar: return "RepeatedChar";
    case InvalidReason::kOutOfVocabulary: return "OutOfVocabulary";
    case InvalidReason::kNotAWord: return "NotAWord";
    case InvalidReason::kUnparseable: return "Unparseable";
  }
  return "Unknown";
}

std::string_view describe(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::kWrongLength: return "wrong number of characters";
    case InvalidReason::kRepeatedChar: return "repeated characters";
    case InvalidReason::kOutOfVocabulary: return "character not in the valid set";
    case InvalidReason::kNotAWord: return "not a valid word";
    case InvalidReason::kUnparseable: return "could not parse the action";
  }
  return "invalid";
}

InvalidGuessError::InvalidGuessError(InvalidReason reason)
    : std::invalid_argument(fmt::format("invalid guess: {}", to_string(reason))), reason_(reason) {}

std::optional<InvalidReason> check_guess(std::string_view chars, const EnvConfig& config) {
  if (static_cast<int>(chars.size()) != config.code_length) return InvalidReason::kWrongLength;
  for (char c : chars) {
    if (config.vocab_index(c) < 0) return InvalidReason::kOutOfVocabulary;
  }
  if (config.unique_chars) {
    for (std::size_t i = 0; i < chars.size(); ++i) {
      if (chars.find(chars[i], i + 1) != std::string_view::npos) {
        return InvalidReason::kRepeatedChar;
      }
    }
  }
  if (config.kind == EnvKind::kWordle) {
    const auto& words = *config.word_list;
    if (!std::binary_search(words.begin(), words.end(), chars)) return InvalidReason::kNotAWord;
  }
  return std::nullopt;
}

StructuredFeedback compute_feedback(std::string_view secret, std::string_view guess,
                                    const EnvConfig& config) {
  if (is_positional(config)) {
    PositionalFeedback feedback;
    feedback.marks.resize(guess.size(), Mark::kAbsent);
    match(secret, guess, [&](std::size_t i, Mark m) { feedback.marks[i] = m; });
    return feedback;
  }
  CountFeedback feedback;
  match(secret, guess, [&](std::size_t, Mark m) {
    if (m == Mark::kCorrectPosition) ++feedback.exact;
    if (m == Mark::kPresentWrongPosition) ++feedback.partial;
  });
  return feedback;
}

std::uint32_t feedback_code(std::string_view secret, std::string_view guess,
                            const EnvConfig& config) {
  std::uint32_t code = 0;
  if (is_positional(config)) {
    match(secret, guess, [&](std::size_t, Mark m) { code = code * 3 + static_cast<std::uint32_t>(m); });
    return code;
  }
  std::uint32_t exact = 0;
  std::uint32_t partial = 0;
  match(secret, guess, [&](std::size_t, Mark m) {
    if (m == Mark::kCorrectPosition) ++exact;
    if (m == Mark::kPresentWrongPosition) ++partial;
  });
  return exact * static_cast<std::uint32_t>(config.code_length + 1) + partial;
}

std::uint32_t encode_feedback(const StructuredFeedback& feedback, const EnvConfig& config) {
  if (const auto* positional = std::get_if<PositionalFeedback>(&feedback)) {
    std::uint32_t code = 0;
    for (Mark m : positional->marks) code = code * 3 + static_cast<std::uint32_t>(m);
    return code;
  }
  const auto& count = std::get<CountFeedback>(feedback);
  return static_cast<std::uint32_t>(count.exact * (config.code_length + 1) + count.partial);
}

std::uint64_t hypothesis_space_size(const EnvConfig& config) {
  const auto v = static_cast<std::uint64_t>(config.vocabulary.size());
  const auto l = static_cast<std::uint64_t>(config.code_length);
  if (config.kind == EnvKind::kWordle) return config.word_list ? config.word_list->size() : 0;
  if (config.unique_chars) return permutations(v, l);
  std::uint64_t size = 1;
  for (std::uint64_t i = 0; i < l; ++i) size = saturating_mul(size, v);
  return size;
}

std::string code_at(const EnvConfig& config, std::uint64_t index) {
  const auto size = hypothesis_space_size(config);
  if (index >= size) {
    throw std::out_of_range(fmt::format("code index {} outside space of {}", index, size));
  }
  if (config.kind == EnvKind::kWordle) return (*config.word_list)[index];

  const auto v = config.vocabulary.size();
  const auto l = static_cast<std::size_t>(config.code_length);
  std::string code;
  code.reserve(l);
  if (config.unique_chars) {
    std::string available = config.vocabulary;
    for (std::size_t pos = 0; pos < l; ++pos) {
      const auto block = permutations(available.size() - 1, l - pos - 1);
      const auto k = index / block;
      index %= block;
      code.push_back(available[k]);
      available.erase(k, 1);
    }
    return code;
  }
  code.assign(l, config.vocabulary[0]);
  for (std::size_t pos = l; pos-- > 0;) {
    code[pos] = config.vocabulary[index % v];
    index /= v;
  }
  return code;
}

namespace {

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  std::uint64_t result = 0;
  a %= m;
  while (b > 0) {
    if (b & 1) result = (result >= m - a) ? result - (m - a) : result + a;
    a = (a >= m - a) ? a - (m - a) : a + a;
    b >>= 1;
  }
  return result;
}

}  // namespace

std::uint64_t seed_to_index(std::uint64_t space_size, std::int64_t seed) {
  if (space_size == 0) throw ConfigError("empty hypothesis space");
  if (space_size == 1) return 0;
  if (space_size > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw ConfigError("hypothesis space too large to index");
  }
  const auto n = static_cast<std::int64_t>(space_size);
  const auto residue = static_cast<std::uint64_t>(((seed % n) + n) % n);
  // Stride near the golden-ratio fraction of the space, coprime with it, so
  // the map is a bijection that scatters neighbouring seeds.
  auto stride = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(
                                               static_cast<long double>(space_size) * 0.6180339887498949L));
  while (std::gcd(stride, space_size) != 1) ++stride;
  return mul_mod(residue, stride, space_size);
}

SecretState sample_task(const EnvConfig& config, std::int64_t seed) {
  config.validate();
  const auto size = hypothesis_space_size(config);
  return SecretState{code_at(config, seed_to_index(size, seed)), 0, false};
}

StepResult step(const SecretState& state, const Guess& guess, const EnvConfig& config) {
  if (state.solved) throw EpisodeOverError("episode already solved");
  if (state.step >= config.horizon) throw EpisodeOverError("horizon exhausted");
  if (auto reason = check_guess(guess.chars, config)) throw InvalidGuessError(*reason);

  StepResult result;
  result.state = state;
  result.state.step = state.step + 1;
  result.success = guess.chars == state.secret;
  result.state.solved = result.success;
  result.done = result.success || result.state.step == config.horizon;
  auto feedback = compute_feedback(state.secret, guess.chars, config);
  result.observation.text = render_observation(feedback, guess, config);
  result.observation.structured = std::move(feedback);
  result.observation.step_after = result.state.step;
  return result;
}

std::string render_observation(const StructuredFeedback& feedback, const Guess& guess,
                               const EnvConfig& config) {
  if (const auto* count = std::get_if<CountFeedback>(&feedback)) {
    return fmt::format("{} exact matches, {} partial matches", count->exact, count->partial);
  }
  const auto& marks = std::get<PositionalFeedback>(feedback).marks;
  std::string out;
  for (std::size_t i = 0; i < marks.size(); ++i) {
    if (i > 0) out += '\n';
    const char c = guess.chars.at(i);
    const int pos = static_cast<int>(i);
    if (config.kind == EnvKind::kWordle) {
      switch (marks[i]) {
        case Mark::kAbsent:
          out += fmt::format("{} letter, {}, is not in the target word", ordinal(pos), c);
          break;
        case Mark::kCorrectPosition:
          out += fmt::format("{} letter, {}, is correct and in the correct position in the target word",
                             ordinal(pos), c);
          break;
        case Mark::kPresentWrongPosition:
          out += fmt::format("{} letter, {}, is in the target word but in the wrong position",
                             ordinal(pos), c);
          break;
      }
      continue;
    }
    switch (marks[i]) {
      case Mark::kAbsent: out += fmt::format("{} is not in the lock", c); break;
      case Mark::kCorrectPosition: out += fmt::format("{} is in Position {}!", c, pos + 1); break;
      case Mark::kPresentWrongPosition:
        out += fmt::format("{} is not in Position {}, but is in the lock", c, pos + 1);
        break;
    }
  }
  return out;
}

std::optional<FeedbackLine> parse_feedback_line(std::string_view line, const EnvConfig& config) {
  line = trim(line);
  if (config.kind == EnvKind::kWordle) return parse_wordle_line(line);
  if (config.kind == EnvKind::kCombinationLock) return parse_lock_line(line, config);
  return std::nullopt;
}

std::optional<CountFeedback> parse_count_line(std::string_view line) {
  constexpr std::string_view kExact = " exact matches, ";
  constexpr std::string_view kPartial = " partial matches";
  line = trim(line);
  auto at = line.find(kExact);
  if (at == std::string_view::npos || !line.ends_with(kPartial)) return std::nullopt;
  auto head = line.substr(0, at);
  auto space = head.find_last_of(' ');
  auto exact = parse_int(space == std::string_view::npos ? head : head.substr(space + 1));
  auto mid = line.substr(at + kExact.size());
  auto partial = parse_int(mid.substr(0, mid.size() - kPartial.size()));
  if (!exact || !partial) return std::nullopt;
  return CountFeedback{*exact, *partial};
}

std::optional<ParsedObservation> parse_observation(std::string_view text,
                                                   const EnvConfig& config) {
  if (!is_positional(config)) {
    auto count = parse_count_line(text);
    if (!count || count->exact + count->partial > config.code_length) return std::nullopt;
    return ParsedObservation{"", *count};
  }
  auto lines = split_lines(text);
  if (static_cast<int>(lines.size()) != config.code_length) return std::nullopt;
  ParsedObservation parsed;
  PositionalFeedback feedback;
  for (int i = 0; i < config.code_length; ++i) {
    auto line = parse_feedback_line(lines[i], config);
    if (!line || (line->position >= 0 && line->position != i)) return std::nullopt;
    parsed.guess.push_back(line->ch);
    feedback.marks.push_back(line->mark);
  }
  parsed.feedback = std::move(feedback);
  return parsed;
}

std::string format_action(const Guess& guess, const EnvConfig& config) {
  if (config.kind == EnvKind::kWordle) return to_upper(guess.chars);
  return format_char_list(guess.chars);
}

std::string format_char_list(std::string_view chars) {
  std::string out = "[";
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (i > 0) out += ", ";
    out += '\'';
    out += chars[i];
    out += '\'';
  }
  out += ']';
  return out;
}

}  // namespace abbel
