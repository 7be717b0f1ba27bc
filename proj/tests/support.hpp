#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "abbel/env.hpp"
#include "abbel/gateway.hpp"
#include "abbel/rollout.hpp"

namespace abbel::testing {

// Feedback computed straight from the game rules, independent of the library.
inline CountFeedback brute_count(const std::string& secret, const std::string& guess) {
  int exact = 0;
  for (std::size_t i = 0; i < secret.size(); ++i) exact += secret[i] == guess[i] ? 1 : 0;
  std::map<char, int> in_secret, in_guess;
  for (char c : secret) ++in_secret[c];
  for (char c : guess) ++in_guess[c];
  int common = 0;
  for (auto [c, n] : in_guess) common += std::min(n, in_secret[c]);
  return {exact, common - exact};
}

inline std::vector<Mark> brute_marks(const std::string& secret, const std::string& guess) {
  std::vector<Mark> marks(guess.size(), Mark::kAbsent);
  std::map<char, int> supply;
  for (std::size_t i = 0; i < guess.size(); ++i) {
    if (guess[i] == secret[i]) {
      marks[i] = Mark::kCorrectPosition;
    } else {
      ++supply[secret[i]];
    }
  }
  for (std::size_t i = 0; i < guess.size(); ++i) {
    if (marks[i] == Mark::kCorrectPosition) continue;
    if (supply[guess[i]] > 0) {
      marks[i] = Mark::kPresentWrongPosition;
      --supply[guess[i]];
    }
  }
  return marks;
}

// Every code over vocabulary of the given length, by nested counting.
inline std::vector<std::string> brute_codes(const std::string& vocabulary, int length,
                                            bool unique) {
  std::vector<std::string> out;
  std::vector<std::size_t> digits(length, 0);
  while (true) {
    std::string code;
    for (auto d : digits) code.push_back(vocabulary[d]);
    std::string sorted = code;
    std::sort(sorted.begin(), sorted.end());
    if (!unique || std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end()) {
      out.push_back(code);
    }
    int pos = length - 1;
    while (pos >= 0 && ++digits[pos] == vocabulary.size()) digits[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

inline EnvConfig small_wordle(int horizon = 6) {
  auto words = std::make_shared<const WordList>(
      WordList{"apple", "crane", "guard", "lemon", "lever", "rebel", "stare", "sweet"});
  return wordle_config(words, horizon, "test");
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("abbel_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::shared_ptr<Gateway> scripted_gateway(std::vector<std::string> script) {
  return std::make_shared<Gateway>(std::make_shared<ScriptedBackend>(std::move(script)));
}

}  // namespace abbel::testing
