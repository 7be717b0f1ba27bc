#include "abbel/belief_format.hpp"

#include <regex>

#include <fmt/format.h>

#include "text_util.hpp"

namespace abbel {
namespace {

std::string render_set(const CharSet& set) {
  std::vector<std::string> items;
  for (char c : set) items.emplace_back(1, c);
  return fmt::format("{{{}}}", join(items, ", "));
}

std::string normalize_quotes(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto rest = text.substr(i);
    if (rest.starts_with("‘") || rest.starts_with("’") || rest.starts_with("“") ||
        rest.starts_with("”")) {
      out += '\'';
      i += 2;
      continue;
    }
    out += text[i];
  }
  return out;
}

bool is_quote(char c) { return c == '\'' || c == '"' || c == '`'; }

// Sentences, each split into its clauses.
std::vector<std::vector<std::string>> split_statements(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto t = trim(current);
    if (!t.empty()) out.emplace_back(t);
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool end_or_space =
        i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (c == '\n' || c == ';' || ((c == '.' || c == '!') && end_or_space)) {
      flush();
      continue;
    }
    current += c;
  }
  flush();
  // Clauses joined by "but" make separate statements.
  std::vector<std::vector<std::string>> sentences;
  static const std::regex kBut(R"(,?\s+but\s+)", std::regex::icase);
  for (const auto& statement : out) {
    std::vector<std::string> clauses;
    std::sregex_token_iterator it(statement.begin(), statement.end(), kBut, -1), end;
    for (; it != end; ++it) {
      auto t = trim(std::string_view(statement.data() + (it->first - statement.begin()), it->length()));
      if (!t.empty()) clauses.emplace_back(t);
    }
    sentences.push_back(std::move(clauses));
  }
  return sentences;
}

class Reader {
 public:
  explicit Reader(const EnvConfig& config) : config_(config) {
    belief_.per_position.assign(config.code_length,
                                CharSet(config.vocabulary.begin(), config.vocabulary.end()));
    for (char c : config.vocabulary) {
      if (std::isupper(static_cast<unsigned char>(c))) keep_case_ = true;
    }
  }

  ParsedBelief run(std::string_view text) {
    auto normalized = normalize_quotes(text);
    if (!keep_case_) normalized = to_lower(normalized);
    for (const auto& sentence : split_statements(normalized)) {
      last_subject_.clear();
      for (const auto& clause : sentence) apply(clause);
    }
    belief_.parse_ok = understood_ > 0;
    for (char c : config_.vocabulary) {
      bool anywhere = false;
      for (const auto& set : belief_.per_position) anywhere = anywhere || set.contains(c);
      if (!anywhere) belief_.absent.insert(c);
    }
    return std::move(belief_);
  }

 private:
  struct Chars {
    CharSet set;
    std::size_t first = std::string::npos;
    bool literal = false;
  };

  bool in_vocab(char c) const { return config_.vocab_index(c) >= 0; }

  // A single character or an inclusive vocabulary range "a..b" / "a-b".
  bool add_token(std::string_view token, CharSet& out) const {
    token = trim(token);
    while (!token.empty() && is_quote(token.front())) token.remove_prefix(1);
    while (!token.empty() && is_quote(token.back())) token.remove_suffix(1);
    if (token.size() == 1 && in_vocab(token[0])) {
      out.insert(token[0]);
      return true;
    }
    std::size_t sep = token.find("..");
    std::size_t width = 2;
    if (sep == std::string_view::npos) {
      sep = token.find('-');
      width = 1;
    }
    if (sep == std::string_view::npos) return false;
    auto lo = trim(token.substr(0, sep));
    auto hi = trim(token.substr(sep + width));
    auto strip = [](std::string_view s) {
      while (!s.empty() && is_quote(s.front())) s.remove_prefix(1);
      while (!s.empty() && is_quote(s.back())) s.remove_suffix(1);
      return s;
    };
    lo = strip(lo);
    hi = strip(hi);
    if (lo.size() != 1 || hi.size() != 1) return false;
    const int a = config_.vocab_index(lo[0]);
    const int b = config_.vocab_index(hi[0]);
    if (a < 0 || b < 0 || a > b) return false;
    for (int i = a; i <= b; ++i) out.insert(config_.vocabulary[i]);
    return true;
  }

  Chars extract_chars(const std::string& clause) const {
    Chars chars;
    const auto open = clause.find_first_of("{[");
    if (open != std::string::npos) {
      const char closer = clause[open] == '{' ? '}' : ']';
      const auto close = clause.find(closer, open + 1);
      if (close != std::string::npos) {
        chars.literal = true;
        chars.first = open;
        std::string_view body(clause.data() + open + 1, close - open - 1);
        std::size_t start = 0;
        for (std::size_t i = 0; i <= body.size(); ++i) {
          if (i == body.size() || body[i] == ',' ||
              std::isspace(static_cast<unsigned char>(body[i]))) {
            if (i > start) add_token(body.substr(start, i - start), chars.set);
            start = i + 1;
          }
        }
        return chars;
      }
    }
    for (std::size_t i = 0; i + 2 < clause.size(); ++i) {
      if (is_quote(clause[i]) && clause[i + 2] == clause[i] && in_vocab(clause[i + 1])) {
        chars.set.insert(clause[i + 1]);
        if (chars.first == std::string::npos) chars.first = i;
        i += 2;
      }
    }
    if (!chars.set.empty()) return chars;
    std::size_t i = 0;
    while (i < clause.size()) {
      auto is_token_char = [&](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-';
      };
      if (!is_token_char(clause[i])) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < clause.size() && is_token_char(clause[j])) ++j;
      auto token = std::string_view(clause).substr(i, j - i);
      while (!token.empty() && (token.back() == '.' || token.back() == '-')) token.remove_suffix(1);
      // The English words "a" and "I" are never read as bare characters.
      const bool article = token.size() == 1 && (token[0] == 'a' || token[0] == 'i');
      if (!token.empty() && !article && add_token(token, chars.set) &&
          chars.first == std::string::npos) {
        chars.first = i;
      }
      i = j;
    }
    return chars;
  }

  void apply(const std::string& original) {
    std::string clause = original;
    std::string lower = to_lower(clause);

    static const std::regex kPositions(
        R"(\bpositions?\s*(\d+)((?:(?:\s*(?:,|\band\b|\bor\b|&)\s*)+(?:positions?\s*)?\d+)*))");
    std::vector<int> positions;
    std::size_t first_position = std::string::npos;
    for (std::sregex_iterator it(lower.begin(), lower.end(), kPositions), end; it != end; ++it) {
      const auto& m = *it;
      if (first_position == std::string::npos) first_position = m.position(0);
      const auto text = m.str(0);
      for (std::size_t k = 0; k < text.size();) {
        if (!std::isdigit(static_cast<unsigned char>(text[k]))) {
          ++k;
          continue;
        }
        std::size_t e = k;
        while (e < text.size() && std::isdigit(static_cast<unsigned char>(text[e]))) ++e;
        const int p = std::stoi(text.substr(k, e - k)) - 1;
        if (p >= 0 && p < config_.code_length &&
            std::find(positions.begin(), positions.end(), p) == positions.end()) {
          positions.push_back(p);
        }
        k = e;
      }
      std::fill_n(clause.begin() + m.position(0), m.length(0), ' ');
      std::fill_n(lower.begin() + m.position(0), m.length(0), ' ');
    }

    auto chars = extract_chars(clause);
    if (chars.set.empty() && !chars.literal) {
      // A clause without characters continues the previous clause's subject.
      chars.set = last_subject_;
      chars.first = 0;
    } else {
      last_subject_ = chars.set;
    }

    static const std::regex kNegation(
        R"(\b(not|cannot|can't|isn't|aren't|excluded|exclude|ruled out|eliminated|absent|never|no longer)\b)");
    static const std::regex kLock(R"(\bin the (lock|combination|code|secret|word)\b)");
    static const std::regex kValid(R"(\b(valid|possible|remaining|allowed) (characters|digits|letters)\b)");
    const bool negated = std::regex_search(lower, kNegation);

    if (!positions.empty()) {
      if (negated) {
        for (int p : positions) {
          for (char c : chars.set) belief_.per_position[p].erase(c);
        }
        ++understood_;
      } else if (chars.literal || (first_position < chars.first && !chars.set.empty())) {
        for (int p : positions) belief_.per_position[p] = chars.set;
        ++understood_;
      } else if (!chars.set.empty()) {
        if (positions.size() == 1 && chars.set.size() == 1) {
          const char c = *chars.set.begin();
          belief_.per_position[positions[0]] = {c};
          if (config_.unique_chars) {
            for (int p = 0; p < config_.code_length; ++p) {
              if (p != positions[0]) belief_.per_position[p].erase(c);
            }
          }
        } else {
          for (int p = 0; p < config_.code_length; ++p) {
            if (std::find(positions.begin(), positions.end(), p) != positions.end()) continue;
            for (char c : chars.set) belief_.per_position[p].erase(c);
          }
        }
        belief_.present_somewhere.insert(chars.set.begin(), chars.set.end());
        ++understood_;
      }
      return;
    }
    if (chars.set.empty() && !chars.literal) return;
    if (negated) {
      for (auto& set : belief_.per_position) {
        for (char c : chars.set) set.erase(c);
      }
      belief_.absent.insert(chars.set.begin(), chars.set.end());
      ++understood_;
    } else if (std::regex_search(lower, kValid)) {
      for (auto& set : belief_.per_position) {
        CharSet kept;
        for (char c : set) {
          if (chars.set.contains(c)) kept.insert(c);
        }
        set = std::move(kept);
      }
      ++understood_;
    } else if (std::regex_search(lower, kLock)) {
      belief_.present_somewhere.insert(chars.set.begin(), chars.set.end());
      ++understood_;
    }
  }

  const EnvConfig& config_;
  ParsedBelief belief_;
  CharSet last_subject_;
  bool keep_case_ = false;
  int understood_ = 0;
};

}  // namespace

std::string render_canonical_belief(const PosteriorProjection& projection) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < projection.per_position.size(); ++i) {
    lines.push_back(fmt::format("Position {}: {}", i + 1, render_set(projection.per_position[i])));
  }
  lines.push_back(fmt::format("In the lock: {}", render_set(projection.present_somewhere)));
  lines.push_back(fmt::format("Not in the lock: {}", render_set(projection.absent)));
  return join(lines, "\n");
}

ParsedBelief reference_parse(std::string_view belief_text, const EnvConfig& config) {
  return Reader(config).run(belief_text);
}

}  // namespace abbel
