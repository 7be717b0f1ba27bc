#include "abbel/posterior.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

namespace abbel {
namespace {

constexpr std::uint64_t kMaxEnumerable = 20'000'000;

}  // namespace

bool ExactPosterior::contains(std::string_view code) const {
  return std::find(candidates.begin(), candidates.end(), code) != candidates.end();
}

ExactPosterior hypothesis_space(const EnvConfig& config) {
  config.validate();
  const auto size = hypothesis_space_size(config);
  if (size > kMaxEnumerable) {
    throw ConfigError(fmt::format("hypothesis space of {} codes is too large to enumerate", size));
  }
  ExactPosterior posterior{config, {}};
  posterior.candidates.reserve(size);
  if (config.kind == EnvKind::kWordle) {
    posterior.candidates = *config.word_list;
    return posterior;
  }
  // Odometer over vocabulary indices; skipped tuples with repeats when
  // unique_chars. Emits in lexicographic vocabulary order.
  const int l = config.code_length;
  const int v = static_cast<int>(config.vocabulary.size());
  std::vector<int> digits(l, 0);
  std::string code(l, ' ');
  while (true) {
    bool ok = true;
    if (config.unique_chars) {
      for (int i = 0; i < l && ok; ++i) {
        for (int j = i + 1; j < l; ++j) {
          if (digits[i] == digits[j]) {
            ok = false;
            break;
          }
        }
      }
    }
    if (ok) {
      for (int i = 0; i < l; ++i) code[i] = config.vocabulary[digits[i]];
      posterior.candidates.push_back(code);
    }
    int pos = l - 1;
    while (pos >= 0 && ++digits[pos] == v) digits[pos--] = 0;
    if (pos < 0) break;
  }
  return posterior;
}

ExactPosterior filter(const ExactPosterior& posterior, const HistoryEntry& entry) {
  const auto& config = posterior.config;
  const auto target = encode_feedback(entry.feedback, config);
  ExactPosterior out{config, {}};
  for (const auto& candidate : posterior.candidates) {
    if (feedback_code(candidate, entry.guess.chars, config) == target) {
      out.candidates.push_back(candidate);
    }
  }
  return out;
}

ExactPosterior filter(const ExactPosterior& posterior, std::span<const HistoryEntry> history) {
  ExactPosterior out = posterior;
  for (const auto& entry : history) out = filter(out, entry);
  return out;
}

PosteriorProjection project(const ExactPosterior& posterior) {
  if (posterior.candidates.empty()) {
    throw DegenerateHistoryError("no secret is consistent with the history");
  }
  const auto& config = posterior.config;
  PosteriorProjection projection;
  projection.per_position.resize(config.code_length);
  CharSet anywhere;
  CharSet in_all(config.vocabulary.begin(), config.vocabulary.end());
  for (const auto& code : posterior.candidates) {
    for (int i = 0; i < config.code_length; ++i) {
      projection.per_position[i].insert(code[i]);
      anywhere.insert(code[i]);
    }
    for (auto it = in_all.begin(); it != in_all.end();) {
      it = code.find(*it) == std::string::npos ? in_all.erase(it) : std::next(it);
    }
  }
  projection.present_somewhere = std::move(in_all);
  for (char c : config.vocabulary) {
    if (!anywhere.contains(c)) projection.absent.insert(c);
  }
  return projection;
}

void write_posterior(std::ostream& out, const ExactPosterior& posterior) {
  auto codes = posterior.candidates;
  std::sort(codes.begin(), codes.end());
  for (const auto& code : codes) out << code << '\n';
}

}  // namespace abbel
