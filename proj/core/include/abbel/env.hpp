#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace abbel {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EnvKind { kCombinationLock, kWordle, kMastermind };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

using WordList = std::vector<std::string>;

struct EnvConfig {
  EnvKind kind = EnvKind::kCombinationLock;
  // Ordered; the order defines "lexicographic" for codes of this env.
  std::string vocabulary;
  int code_length = 0;
  int horizon = 0;
  bool unique_chars = false;
  // Wordle only. Sorted, lowercase, every entry has code_length characters.
  std::shared_ptr<const WordList> word_list;
  // Where word_list came from: "builtin" or a file path. Persisted in place
  // of the words themselves.
  std::string word_list_source;

  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  // Position of c in vocabulary, or -1.
  int vocab_index(char c) const;

  // Short stable identifier, e.g. "combination_lock[0123456789;L=3;H=12]".
  std::string describe() const;

  friend bool operator==(const EnvConfig& a, const EnvConfig& b);
};

EnvConfig combination_lock_config(std::string vocabulary, int horizon, int code_length = 3);
EnvConfig mastermind_config(std::string vocabulary = "0123456789", int code_length = 4,
                            int horizon = 12);
EnvConfig wordle_config(std::shared_ptr<const WordList> words, int horizon = 6,
                        std::string source = "builtin");

// The 2315 Wordle answer words shipped with the library.
std::shared_ptr<const WordList> builtin_wordle_answers();
// One word per line; blank lines skipped; words lowercased and sorted.
std::shared_ptr<const WordList> load_word_list(const std::filesystem::path& path);
std::shared_ptr<const WordList> resolve_word_list(const std::string& source);

// Named configurations:
//   lock-train    10 digits, L=3, H=12 (720 codes)
//   lock-train-9  "012345689", L=3, H=12 (the vocabulary string as tabulated)
//   lock-test     "qawsedrftgyhujik", L=3, H=16 (3360 codes)
//   wordle        builtin answers, L=5, H=6
//   mastermind    10 digits, L=4, repeats, H=12
EnvConfig preset_config(std::string_view name);
std::vector<std::string> preset_names();

struct Guess {
  std::string chars;

  friend auto operator<=>(const Guess&, const Guess&) = default;
};

struct SecretState {
  std::string secret;
  int step = 0;
  bool solved = false;

  friend bool operator==(const SecretState&, const SecretState&) = default;
};

enum class Mark : std::uint8_t { kAbsent, kPresentWrongPosition, kCorrectPosition };

struct PositionalFeedback {
  std::vector<Mark> marks;
  friend bool operator==(const PositionalFeedback&, const PositionalFeedback&) = default;
};

struct CountFeedback {
  int exact = 0;
  int partial = 0;
  friend bool operator==(const CountFeedback&, const CountFeedback&) = default;
};

using StructuredFeedback = std::variant<PositionalFeedback, CountFeedback>;

struct Observation {
  std::string text;
  StructuredFeedback structured;
  int step_after = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

enum class InvalidReason { kWrongLength, kRepeatedChar, kOutOfVocabulary, kNotAWord, kUnparseable };

std::string_view to_string(InvalidReason reason);
// Human-readable wording used in retry messages.
std::string_view describe(InvalidReason reason);

class InvalidGuessError : public std::invalid_argument {
 public:
  explicit InvalidGuessError(InvalidReason reason);
  InvalidReason reason() const { return reason_; }

 private:
  InvalidReason reason_;
};

class EpisodeOverError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// nullopt when chars is a legal guess (and legal secret) for config.
std::optional<InvalidReason> check_guess(std::string_view chars, const EnvConfig& config);

// Feedback for guess against secret. Both must be valid for config.
StructuredFeedback compute_feedback(std::string_view secret, std::string_view guess,
                                    const EnvConfig& config);

// Compact integer encoding of the feedback of guess against secret; equal
// codes iff equal StructuredFeedback. Allocation free, used by filtering.
std::uint32_t feedback_code(std::string_view secret, std::string_view guess,
                            const EnvConfig& config);
std::uint32_t encode_feedback(const StructuredFeedback& feedback, const EnvConfig& config);

// Number of secrets the config admits.
std::uint64_t hypothesis_space_size(const EnvConfig& config);
// index-th code of the hypothesis space in lexicographic (vocabulary) order.
std::string code_at(const EnvConfig& config, std::uint64_t index);

// Deterministic: the seed is mapped bijectively (mod the space size) onto an
// index of the ordered hypothesis space, so any run of |space| consecutive
// seeds covers every secret exactly once.
SecretState sample_task(const EnvConfig& config, std::int64_t seed);
std::uint64_t seed_to_index(std::uint64_t space_size, std::int64_t seed);

struct StepResult {
  SecretState state;
  Observation observation;
  bool done = false;
  bool success = false;
};

StepResult step(const SecretState& state, const Guess& guess, const EnvConfig& config);

std::string render_observation(const StructuredFeedback& feedback, const Guess& guess,
                               const EnvConfig& config);

struct ParsedObservation {
  // Recovered from positional lines; empty for count feedback.
  std::string guess;
  StructuredFeedback feedback;
};

// Inverse of render_observation.
std::optional<ParsedObservation> parse_observation(std::string_view text,
                                                   const EnvConfig& config);

// One rendered positional feedback line: (position, char, mark). Searches
// rather than matches, so a line may carry a prefix such as a label.
struct FeedbackLine {
  int position = 0;  // 0-based
  char ch = 0;
  Mark mark = Mark::kAbsent;
};
std::optional<FeedbackLine> parse_feedback_line(std::string_view line, const EnvConfig& config);
std::optional<CountFeedback> parse_count_line(std::string_view line);

// Canonical action text: "['0', '1', '2']" for character codes, the
// uppercased word for Wordle.
std::string format_action(const Guess& guess, const EnvConfig& config);

// "['0', '1', '2', ...]" listing of the vocabulary.
std::string format_char_list(std::string_view chars);

}  // namespace abbel
