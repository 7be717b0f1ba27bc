#include "abbel/grading.hpp"

#include <atomic>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "abbel/resources.hpp"
#include "text_util.hpp"

namespace abbel {

ParsedBelief ReferenceBeliefParser::parse(std::string_view belief_text, const EnvConfig& config) {
  return reference_parse(belief_text, config);
}

LlmBeliefParser::LlmBeliefParser(Gateway& gateway, double temperature, int max_output_tokens)
    : gateway_(gateway), temperature_(temperature), max_output_tokens_(max_output_tokens) {}

std::string LlmBeliefParser::id() const { return fmt::format("llm:{}", gateway_.backend().id()); }

Context LlmBeliefParser::parsing_context(std::string_view belief_text, const EnvConfig& config) {
  std::vector<std::string> lines;
  for (int i = 1; i <= config.code_length; ++i) {
    lines.push_back(fmt::format("Position {}: {{...}}", i));
  }
  const auto tmpl = embedded_resource("prompts/belief_parser.txt").value_or("{belief}");
  return {{"user", render_template(tmpl, {{"code_length", std::to_string(config.code_length)},
                                          {"vocabulary_list", format_char_list(config.vocabulary)},
                                          {"position_lines", join(lines, "\n")},
                                          {"belief", std::string(belief_text)}})}};
}

ParsedBelief LlmBeliefParser::parse(std::string_view belief_text, const EnvConfig& config) {
  if (trim(belief_text).empty()) return reference_parse("", config);
  CompletionRequest request{parsing_context(belief_text, config), temperature_,
                            max_output_tokens_, std::nullopt};
  const auto result = gateway_.complete(request);
  const auto tagged = parse_tagged(result.text, PayloadTag::kBelief, "parsed");
  if (!tagged.ok()) return reference_parse("", config);
  return reference_parse(*tagged.payload, config);
}

int grade(const ParsedBelief& belief, const PosteriorProjection& truth) {
  return belief.parse_ok && belief.per_position == truth.per_position ? 1 : 0;
}

int grade(std::string_view belief_text, const PosteriorProjection& truth, BeliefParser& parser,
          const EnvConfig& config) {
  if (trim(belief_text).empty()) return 0;
  return grade(parser.parse(belief_text, config), truth);
}

std::vector<BeliefGroup> build_groups(const Trajectory& trajectory, Gateway& policy,
                                      const PromptSet& prompts, BeliefParser& parser,
                                      const GroupingOptions& options,
                                      std::vector<std::string>* skipped) {
  if (trajectory.regime != Regime::kAbbel) {
    throw GradingError(fmt::format("{}: belief groups need an abbel trajectory, got {}",
                                   trajectory.id, to_string(trajectory.regime)));
  }
  std::vector<BeliefGroup> groups;
  auto posterior = hypothesis_space(trajectory.config);
  for (const auto& step : trajectory.steps) {
    if (!step.guess) {
      throw GradingError(fmt::format("{}: step {} has no guess", trajectory.id, step.index));
    }
    posterior = filter(posterior, HistoryEntry{*step.guess, step.observation.structured});
    if (!step.belief_after) break;

    const CallRecord* original = nullptr;
    for (const auto& call : step.calls) {
      const bool belief_call = call.purpose == CallPurpose::kBeliefUpdate ||
                               call.retry_of == CallPurpose::kBeliefUpdate;
      if (belief_call && call.accepted()) original = &call;
    }
    if (!original) {
      throw GradingError(fmt::format("{}: step {} has no stored belief-update context",
                                     trajectory.id, step.index));
    }

    const auto truth = project(posterior);
    BeliefGroup group;
    group.trajectory_id = trajectory.id;
    group.step_index = step.index;
    group.context = original->context;
    group.context_hash = hash_context(group.context);
    group.original_belief = *step.belief_after;
    try {
      CompletionRequest request{group.context, options.temperature, options.max_output_tokens,
                                mix64(group.context_hash ^ 0x9e3779b97f4a7c15ULL)};
      const auto result = policy.complete(request);
      const auto tagged =
          parse_tagged(result.text, PayloadTag::kBelief, prompts.belief_tag, prompts.think_tag);
      group.regenerated_valid = tagged.ok();
      group.regenerated_belief = tagged.ok() ? *tagged.payload : result.text;
      group.grades[0] = grade(group.original_belief, truth, parser, trajectory.config);
      group.grades[1] = group.regenerated_valid
                            ? grade(group.regenerated_belief, truth, parser, trajectory.config)
                            : 0;
    } catch (const GatewayError& e) {
      auto message = fmt::format("{}: step {} skipped: {}", trajectory.id, step.index, e.what());
      spdlog::warn("{}", message);
      if (skipped) skipped->push_back(std::move(message));
      break;
    }
    const bool stop = group.grades[0] == 0;
    groups.push_back(std::move(group));
    if (stop) break;
  }
  return groups;
}

std::vector<BeliefGroup> build_groups_batch(const std::vector<Trajectory>& trajectories,
                                            Gateway& policy, const PromptSet& prompts,
                                            BeliefParser& parser, const GroupingOptions& options,
                                            int parallelism, std::vector<std::string>* skipped) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
  std::vector<std::vector<BeliefGroup>> per_trajectory(trajectories.size());
  std::vector<std::vector<std::string>> per_skipped(trajectories.size());
  std::vector<std::exception_ptr> errors(trajectories.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < trajectories.size(); i = next.fetch_add(1)) {
      try {
        per_trajectory[i] =
            build_groups(trajectories[i], policy, prompts, parser, options, &per_skipped[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism), trajectories.size());
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < workers; ++i) threads.emplace_back(worker);
  worker();
  for (auto& thread : threads) thread.join();

  std::vector<BeliefGroup> groups;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    for (auto& group : per_trajectory[i]) groups.push_back(std::move(group));
    if (skipped) {
      for (auto& message : per_skipped[i]) skipped->push_back(std::move(message));
    }
  }
  return groups;
}

}  // namespace abbel
