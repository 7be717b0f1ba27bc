#include "json_io.hpp"

#include <fmt/format.h>

namespace abbel {
namespace {

template <typename T>
json optional_to_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

std::string_view mark_name(Mark mark) {
  switch (mark) {
    case Mark::kAbsent: return "Absent";
    case Mark::kPresentWrongPosition: return "PresentWrongPosition";
    case Mark::kCorrectPosition: return "CorrectPosition";
  }
  return "Absent";
}

Mark mark_from_name(std::string_view name) {
  if (name == "Absent") return Mark::kAbsent;
  if (name == "PresentWrongPosition") return Mark::kPresentWrongPosition;
  if (name == "CorrectPosition") return Mark::kCorrectPosition;
  throw std::invalid_argument(fmt::format("unknown feedback mark '{}'", name));
}

json feedback_to_json(const StructuredFeedback& feedback) {
  if (const auto* positional = std::get_if<PositionalFeedback>(&feedback)) {
    json marks = json::array();
    for (auto mark : positional->marks) marks.push_back(mark_name(mark));
    return {{"marks", marks}};
  }
  const auto& count = std::get<CountFeedback>(feedback);
  return {{"exact", count.exact}, {"partial", count.partial}};
}

StructuredFeedback feedback_from_json(const json& j) {
  if (j.contains("marks")) {
    PositionalFeedback feedback;
    for (const auto& mark : j.at("marks")) {
      feedback.marks.push_back(mark_from_name(mark.get<std::string>()));
    }
    return feedback;
  }
  return CountFeedback{j.at("exact").get<int>(), j.at("partial").get<int>()};
}

json result_to_json(const CompletionResult& result) {
  return {{"text", result.text},
          {"input_tokens", result.input_tokens},
          {"output_tokens", result.output_tokens},
          {"latency_ms", result.latency_ms},
          {"backend_id", result.backend_id},
          {"tokens_estimated", result.tokens_estimated}};
}

CompletionResult result_from_json(const json& j) {
  CompletionResult result;
  result.text = j.at("text").get<std::string>();
  result.input_tokens = j.at("input_tokens").get<int>();
  result.output_tokens = j.at("output_tokens").get<int>();
  result.latency_ms = j.at("latency_ms").get<std::int64_t>();
  result.backend_id = j.at("backend_id").get<std::string>();
  result.tokens_estimated = j.at("tokens_estimated").get<bool>();
  return result;
}

json call_to_json(const CallRecord& call) {
  return {{"purpose", to_string(call.purpose)},
          {"retry_of", call.retry_of ? json(to_string(*call.retry_of)) : json(nullptr)},
          {"context", context_to_json(call.context)},
          {"result", result_to_json(call.result)},
          {"rejection", call.rejection}};
}

CallRecord call_from_json(const json& j) {
  CallRecord call;
  call.purpose = call_purpose_from_string(j.at("purpose").get<std::string>());
  if (auto retry_of = optional_from_json<std::string>(j, "retry_of")) {
    call.retry_of = call_purpose_from_string(*retry_of);
  }
  call.context = context_from_json(j.at("context"));
  call.result = result_from_json(j.at("result"));
  call.rejection = j.at("rejection").get<std::string>();
  return call;
}

json calls_to_json(const std::vector<CallRecord>& calls) {
  json out = json::array();
  for (const auto& call : calls) out.push_back(call_to_json(call));
  return out;
}

std::vector<CallRecord> calls_from_json(const json& j) {
  std::vector<CallRecord> calls;
  for (const auto& call : j) calls.push_back(call_from_json(call));
  return calls;
}

json step_to_json(const TranscriptStep& step) {
  return {{"index", step.index},
          {"belief_before", optional_to_json(step.belief_before)},
          {"action_raw", step.action_raw},
          {"action_text", step.action_text},
          {"guess", step.guess ? json(step.guess->chars) : json(nullptr)},
          {"observation",
           {{"text", step.observation.text},
            {"structured", feedback_to_json(step.observation.structured)},
            {"step_after", step.observation.step_after}}},
          {"belief_after", optional_to_json(step.belief_after)},
          {"belief_tokens", step.belief_tokens},
          {"belief_tokens_estimated", step.belief_tokens_estimated},
          {"history_tokens", step.history_tokens},
          {"history_chars", step.history_chars},
          {"invalid_attempts", step.invalid_attempts},
          {"calls", calls_to_json(step.calls)}};
}

TranscriptStep step_from_json(const json& j) {
  TranscriptStep step;
  step.index = j.at("index").get<int>();
  step.belief_before = optional_from_json<std::string>(j, "belief_before");
  step.action_raw = j.at("action_raw").get<std::string>();
  step.action_text = j.at("action_text").get<std::string>();
  if (auto guess = optional_from_json<std::string>(j, "guess")) step.guess = Guess{*guess};
  const auto& observation = j.at("observation");
  step.observation.text = observation.at("text").get<std::string>();
  step.observation.structured = feedback_from_json(observation.at("structured"));
  step.observation.step_after = observation.at("step_after").get<int>();
  step.belief_after = optional_from_json<std::string>(j, "belief_after");
  step.belief_tokens = j.at("belief_tokens").get<int>();
  step.belief_tokens_estimated = j.at("belief_tokens_estimated").get<bool>();
  step.history_tokens = j.at("history_tokens").get<int>();
  step.history_chars = j.at("history_chars").get<int>();
  step.invalid_attempts = j.at("invalid_attempts").get<int>();
  step.calls = calls_from_json(j.at("calls"));
  return step;
}

}  // namespace

json env_config_to_json(const EnvConfig& config) {
  json j = {{"kind", to_string(config.kind)},
            {"vocabulary", config.vocabulary},
            {"code_length", config.code_length},
            {"horizon", config.horizon},
            {"unique_chars", config.unique_chars}};
  if (config.kind == EnvKind::kWordle) j["word_list_path"] = config.word_list_source;
  return j;
}

EnvConfig env_config_from_json(const json& j) {
  EnvConfig config;
  if (j.contains("preset")) {
    config = preset_config(j.at("preset").get<std::string>());
  } else {
    config.kind = env_kind_from_string(j.at("kind").get<std::string>());
  }
  const bool has_words = j.contains("word_list_path");
  switch (config.kind) {
    case EnvKind::kWordle: {
      const auto source =
          has_words ? j.at("word_list_path").get<std::string>()
                    : (config.word_list_source.empty() ? std::string("builtin")
                                                       : config.word_list_source);
      const int horizon = j.value("horizon", config.horizon > 0 ? config.horizon : 6);
      config = wordle_config(resolve_word_list(source), horizon, source);
      break;
    }
    case EnvKind::kCombinationLock:
      config = combination_lock_config(j.value("vocabulary", config.vocabulary),
                                       j.value("horizon", config.horizon),
                                       j.value("code_length", config.code_length > 0
                                                                  ? config.code_length
                                                                  : 3));
      break;
    case EnvKind::kMastermind:
      config = mastermind_config(
          j.value("vocabulary", config.vocabulary.empty() ? std::string("0123456789")
                                                          : config.vocabulary),
          j.value("code_length", config.code_length > 0 ? config.code_length : 4),
          j.value("horizon", config.horizon > 0 ? config.horizon : 12));
      break;
  }
  if (j.contains("unique_chars") && j.at("unique_chars").get<bool>() != config.unique_chars) {
    throw ConfigError(fmt::format("{} fixes unique_chars to {}", to_string(config.kind),
                                  config.unique_chars));
  }
  config.validate();
  return config;
}

json context_to_json(const Context& context) {
  json out = json::array();
  for (const auto& message : context) {
    out.push_back({{"role", message.role}, {"content", message.content}});
  }
  return out;
}

Context context_from_json(const json& j) {
  Context context;
  for (const auto& message : j) {
    context.push_back({message.at("role").get<std::string>(),
                       message.at("content").get<std::string>()});
  }
  return context;
}

json trajectory_to_json(const Trajectory& trajectory) {
  json steps = json::array();
  for (const auto& step : trajectory.steps) steps.push_back(step_to_json(step));
  return {{"id", trajectory.id},
          {"config", env_config_to_json(trajectory.config)},
          {"regime", to_string(trajectory.regime)},
          {"seed", trajectory.seed},
          {"rollout_index", trajectory.rollout_index},
          {"secret", trajectory.secret},
          {"success", trajectory.success},
          {"env_steps_taken", trajectory.env_steps_taken},
          {"generation_calls_used", trajectory.generation_calls_used},
          {"generation_budget", trajectory.generation_budget},
          {"termination", to_string(trajectory.termination)},
          {"error", trajectory.error},
          {"steps", steps},
          {"pending_calls", calls_to_json(trajectory.pending_calls)}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory trajectory;
  trajectory.id = j.at("id").get<std::string>();
  trajectory.config = env_config_from_json(j.at("config"));
  trajectory.regime = regime_from_string(j.at("regime").get<std::string>());
  trajectory.seed = j.at("seed").get<std::int64_t>();
  trajectory.rollout_index = j.at("rollout_index").get<int>();
  trajectory.secret = j.at("secret").get<std::string>();
  trajectory.success = j.at("success").get<bool>();
  trajectory.env_steps_taken = j.at("env_steps_taken").get<int>();
  trajectory.generation_calls_used = j.at("generation_calls_used").get<int>();
  trajectory.generation_budget = j.at("generation_budget").get<int>();
  trajectory.termination = termination_from_string(j.at("termination").get<std::string>());
  trajectory.error = j.at("error").get<std::string>();
  for (const auto& step : j.at("steps")) trajectory.steps.push_back(step_from_json(step));
  trajectory.pending_calls = calls_from_json(j.at("pending_calls"));
  return trajectory;
}

json belief_group_to_json(const BeliefGroup& group) {
  return {{"trajectory_id", group.trajectory_id},
          {"step_index", group.step_index},
          {"context", context_to_json(group.context)},
          {"context_hash", group.context_hash},
          {"belief_a", group.original_belief},
          {"belief_b", group.regenerated_belief},
          {"belief_b_valid", group.regenerated_valid},
          {"grade_a", group.grades[0]},
          {"grade_b", group.grades[1]}};
}

BeliefGroup belief_group_from_json(const json& j) {
  BeliefGroup group;
  group.trajectory_id = j.at("trajectory_id").get<std::string>();
  group.step_index = j.at("step_index").get<int>();
  group.context = context_from_json(j.at("context"));
  group.context_hash = j.at("context_hash").get<std::uint64_t>();
  group.original_belief = j.at("belief_a").get<std::string>();
  group.regenerated_belief = j.at("belief_b").get<std::string>();
  group.regenerated_valid = j.at("belief_b_valid").get<bool>();
  group.grades = {j.at("grade_a").get<int>(), j.at("grade_b").get<int>()};
  return group;
}

json reward_record_to_json(const RewardRecord& record) {
  return {{"trajectory_id", record.trajectory_id},
          {"group_id", record.group_id},
          {"outcome_reward", record.outcome_reward.str()},
          {"outcome_reward_value", record.outcome_reward.value()},
          {"regret_curve", record.regret_curve},
          {"max_belief_tokens", optional_to_json(record.max_belief_tokens)},
          {"belief_tokens_estimated", record.belief_tokens_estimated},
          {"penalty", record.penalty},
          {"advantage", record.advantage}};
}

RewardRecord reward_record_from_json(const json& j) {
  RewardRecord record;
  record.trajectory_id = j.at("trajectory_id").get<std::string>();
  record.group_id = j.at("group_id").get<std::string>();
  const auto reward = j.at("outcome_reward").get<std::string>();
  const auto slash = reward.find('/');
  record.outcome_reward =
      slash == std::string::npos
          ? Fraction{std::stoll(reward), 1}
          : Fraction::make(std::stoll(reward.substr(0, slash)), std::stoll(reward.substr(slash + 1)));
  record.regret_curve = j.at("regret_curve").get<std::vector<int>>();
  record.max_belief_tokens = optional_from_json<int>(j, "max_belief_tokens");
  record.belief_tokens_estimated = j.at("belief_tokens_estimated").get<bool>();
  record.penalty = j.at("penalty").get<double>();
  record.advantage = j.at("advantage").get<double>();
  return record;
}

}  // namespace abbel
