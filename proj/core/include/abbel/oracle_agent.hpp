#pragma once

#include <string>

#include "abbel/gateway.hpp"
#include "abbel/posterior.hpp"
#include "abbel/prompt.hpp"

namespace abbel {

// Consistent guessing: the lexicographically smallest remaining candidate.
// Throws DegenerateHistoryError on an empty posterior.
Guess oracle_agent(const ExactPosterior& posterior);

// Posterior recovered from the text of a context: starts from the last
// "Candidates:" line (or the full space) and filters by every rendered
// (action, feedback) pair found in the text.
ExactPosterior posterior_from_text(std::string_view text, const EnvConfig& config,
                                   const PromptSet& prompts);

// Belief payload written by the oracle: the canonical projection followed by
// a "Candidates:" line listing the posterior.
std::string oracle_belief(const ExactPosterior& posterior);

// Plays the oracle agent through the regular prompt plumbing. Each reply is
// a function of the request context alone: belief-update contexts get an
// oracle belief, action contexts get the oracle's guess.
class OracleAgentBackend : public Backend {
 public:
  OracleAgentBackend(EnvConfig config, PromptSet prompts);

  CompletionResult complete(const CompletionRequest& request) override;
  std::string id() const override { return "oracle"; }

 private:
  EnvConfig config_;
  PromptSet prompts_;
};

}  // namespace abbel
