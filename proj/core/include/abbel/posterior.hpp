#pragma once

#include <iosfwd>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abbel/env.hpp"

namespace abbel {

struct HistoryEntry {
  Guess guess;
  StructuredFeedback feedback;
};

// Every secret consistent with a history, enumerated explicitly. Candidates
// stay in the lexicographic (vocabulary) order of the hypothesis space.
struct ExactPosterior {
  EnvConfig config;
  std::vector<std::string> candidates;

  bool contains(std::string_view code) const;
};

using CharSet = std::set<char>;

// Per-position view of a posterior, the form beliefs are graded against.
//   per_position[i]   characters some candidate has at position i
//   present_somewhere characters that occur in every candidate
//   absent            vocabulary characters that occur in no candidate
struct PosteriorProjection {
  std::vector<CharSet> per_position;
  CharSet present_somewhere;
  CharSet absent;

  friend bool operator==(const PosteriorProjection&, const PosteriorProjection&) = default;
};

class DegenerateHistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws ConfigError when the space is too large to enumerate.
ExactPosterior hypothesis_space(const EnvConfig& config);

ExactPosterior filter(const ExactPosterior& posterior, const HistoryEntry& entry);
ExactPosterior filter(const ExactPosterior& posterior, std::span<const HistoryEntry> history);

// Throws DegenerateHistoryError on an empty posterior.
PosteriorProjection project(const ExactPosterior& posterior);

// Sorted code list, one per line.
void write_posterior(std::ostream& out, const ExactPosterior& posterior);

}  // namespace abbel
