#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "abbel/belief_format.hpp"
#include "abbel/gateway.hpp"
#include "abbel/posterior.hpp"
#include "abbel/prompt.hpp"
#include "abbel/rollout.hpp"

namespace abbel {

class GradingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BeliefParser {
 public:
  virtual ~BeliefParser() = default;
  // May throw GatewayError when backed by a model.
  virtual ParsedBelief parse(std::string_view belief_text, const EnvConfig& config) = 0;
  virtual std::string id() const = 0;
};

class ReferenceBeliefParser : public BeliefParser {
 public:
  ParsedBelief parse(std::string_view belief_text, const EnvConfig& config) override;
  std::string id() const override { return "reference"; }
};

// Asks a model to rewrite the belief in the canonical format, then reads the
// rewrite with reference_parse.
class LlmBeliefParser : public BeliefParser {
 public:
  explicit LlmBeliefParser(Gateway& gateway, double temperature = 0.0,
                           int max_output_tokens = 1024);

  ParsedBelief parse(std::string_view belief_text, const EnvConfig& config) override;
  std::string id() const override;

  // The rewrite request sent for a belief.
  static Context parsing_context(std::string_view belief_text, const EnvConfig& config);

 private:
  Gateway& gateway_;
  double temperature_;
  int max_output_tokens_;
};

// 1 iff the belief parsed and its per-position sets equal the truth's.
int grade(const ParsedBelief& belief, const PosteriorProjection& truth);
int grade(std::string_view belief_text, const PosteriorProjection& truth, BeliefParser& parser,
          const EnvConfig& config);

struct BeliefGroup {
  std::string trajectory_id;
  int step_index = 0;  // env step whose belief update is regraded
  Context context;
  std::uint64_t context_hash = 0;
  std::string original_belief;
  std::string regenerated_belief;  // payload, or the raw text when untagged
  bool regenerated_valid = false;
  std::array<int, 2> grades{0, 0};  // original, regenerated

  friend bool operator==(const BeliefGroup&, const BeliefGroup&) = default;
};

struct GroupingOptions {
  double temperature = 1.0;
  int max_output_tokens = 1024;
};

// Regenerates every accepted belief update once from the context that
// produced it and grades both beliefs against the exact posterior after that
// step. Stops after the first step whose original belief grades 0. A gateway
// failure while regenerating or parsing ends grading of the trajectory; the
// reason is appended to `skipped`.
std::vector<BeliefGroup> build_groups(const Trajectory& trajectory, Gateway& policy,
                                      const PromptSet& prompts, BeliefParser& parser,
                                      const GroupingOptions& options = {},
                                      std::vector<std::string>* skipped = nullptr);

// build_groups over many trajectories, in trajectory order.
std::vector<BeliefGroup> build_groups_batch(const std::vector<Trajectory>& trajectories,
                                            Gateway& policy, const PromptSet& prompts,
                                            BeliefParser& parser, const GroupingOptions& options,
                                            int parallelism,
                                            std::vector<std::string>* skipped = nullptr);

}  // namespace abbel
